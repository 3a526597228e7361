#include <istream>
#include <ostream>
#include <sstream>

#include "bcer/consensus/simulation.hpp"

namespace bcer::consensus {

void write_trace(std::ostream& out, const SimTrace& trace) {
  for (const auto& [key, value] : trace.header) out << key << '=' << value << '\n';
  out << '\n';
  for (const auto& e : trace.events) out << e.tick << ' ' << e.node << ' ' << e.kind << ' ' << e.outcome << '\n';
  for (const auto& c : trace.commits)
    out << "commit " << c.tick << ' ' << c.node << ' ' << c.height << ' ' << c.block_hash << ' '
        << (c.register_id.empty() ? "-" : c.register_id) << '\n';
}

SimTrace read_trace(std::istream& in) {
  SimTrace trace;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) break;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value");
    trace.header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line.rfind("commit ", 0) == 0) {
      SimCommit c;
      std::string tag;
      if (!(fields >> tag >> c.tick >> c.node >> c.height >> c.block_hash >> c.register_id)) fail("bad commit");
      if (c.register_id == "-") c.register_id.clear();
      trace.commits.push_back(std::move(c));
      continue;
    }
    SimEvent e;
    if (!(fields >> e.tick >> e.node >> e.kind)) fail("bad event");
    fields >> std::ws;
    std::getline(fields, e.outcome);
    trace.events.push_back(std::move(e));
  }
  return trace;
}

}  // namespace bcer::consensus
