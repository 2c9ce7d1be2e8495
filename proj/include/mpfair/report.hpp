#pragma once

#include <iomanip>
#include <sstream>
#include <string>

#include "mpfair/waterfill.hpp"

namespace mpfair {

enum class OutputFormat { Table, Csv, JsonLines };

inline std::optional<OutputFormat> parse_format(std::string_view s) {
  if (s == "table") return OutputFormat::Table;
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json-lines") return OutputFormat::JsonLines;
  return std::nullopt;
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') { out += '\\'; out += c; }
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out;
}

inline void pad(std::ostringstream& os, const std::string& s, size_t width) {
  os << s;
  for (size_t i = s.size(); i < width; ++i) os << ' ';
}

}  // namespace detail

/// One policy's allocation. Tables round half-up to two decimals; csv and
/// json-lines carry exact `p/q` strings.
inline std::string emit_allocation(const Network& net, FairnessPolicy policy,
                                   const AllocationVector& alloc, OutputFormat format) {
  auto sums = vc_sums(net, alloc);
  std::ostringstream os;
  switch (format) {
    case OutputFormat::Table: {
      size_t w = 8;
      for (const auto& [s, r] : alloc.rates) w = std::max(w, s.size() + 2);
      os << "policy: " << policy_name(policy) << "\n";
      detail::pad(os, "source", w);
      os << "rate_mbps\n";
      for (const auto& [s, r] : alloc.rates) {
        detail::pad(os, s, w);
        os << r.fixed(2) << "\n";
      }
      os << "\n";
      detail::pad(os, "vc", w);
      os << "sum_mbps\n";
      for (const auto& [vc, r] : sums) {
        detail::pad(os, vc, w);
        os << r.fixed(2) << "\n";
      }
      break;
    }
    case OutputFormat::Csv: {
      os << "kind,id,policy,rate_mbps\n";
      for (const auto& [s, r] : alloc.rates)
        os << "source," << s << "," << policy_name(policy) << "," << r.str() << "\n";
      for (const auto& [vc, r] : sums)
        os << "vc," << vc << "," << policy_name(policy) << "," << r.str() << "\n";
      break;
    }
    case OutputFormat::JsonLines: {
      for (const auto& [s, r] : alloc.rates)
        os << R"({"kind":"source","id":")" << detail::json_escape(s) << R"(","policy":")"
           << policy_name(policy) << R"(","rate_mbps":")" << r.str() << "\"}\n";
      for (const auto& [vc, r] : sums)
        os << R"({"kind":"vc","id":")" << detail::json_escape(vc) << R"(","policy":")"
           << policy_name(policy) << R"(","rate_mbps":")" << r.str() << "\"}\n";
      break;
    }
  }
  return os.str();
}

/// Side-by-side table of all four policies: per-source rates then per-VC sums.
inline std::string emit_comparison(const Network& net, const PolicyComparison& cmp,
                                   OutputFormat format) {
  std::ostringstream os;
  std::vector<SourceId> sources;
  for (const auto& [s, vi] : net.vc_of_source) sources.push_back(s);

  switch (format) {
    case OutputFormat::Table: {
      size_t w = 8;
      for (const auto& s : sources) w = std::max(w, s.size() + 2);
      detail::pad(os, "source", w);
      for (FairnessPolicy p : kAllPolicies) detail::pad(os, policy_name(p), 12);
      os << "\n";
      for (const auto& s : sources) {
        detail::pad(os, s, w);
        for (FairnessPolicy p : kAllPolicies)
          detail::pad(os, cmp.results.at(p).alloc.at(s).fixed(2), 12);
        os << "\n";
      }
      os << "\n";
      detail::pad(os, "vc", w);
      for (FairnessPolicy p : kAllPolicies) detail::pad(os, policy_name(p), 12);
      os << "\n";
      for (const auto& vc : net.vcs) {
        detail::pad(os, vc.id, w);
        for (FairnessPolicy p : kAllPolicies)
          detail::pad(os, vc_sums(net, cmp.results.at(p).alloc).at(vc.id).fixed(2), 12);
        os << "\n";
      }
      break;
    }
    case OutputFormat::Csv: {
      os << "kind,id,policy,rate_mbps\n";
      for (FairnessPolicy p : kAllPolicies) {
        for (const auto& s : sources)
          os << "source," << s << "," << policy_name(p) << ","
             << cmp.results.at(p).alloc.at(s).str() << "\n";
        auto sums = vc_sums(net, cmp.results.at(p).alloc);
        for (const auto& [vc, r] : sums)
          os << "vc," << vc << "," << policy_name(p) << "," << r.str() << "\n";
      }
      break;
    }
    case OutputFormat::JsonLines: {
      for (FairnessPolicy p : kAllPolicies) {
        for (const auto& s : sources)
          os << R"({"kind":"source","id":")" << detail::json_escape(s) << R"(","policy":")"
             << policy_name(p) << R"(","rate_mbps":")" << cmp.results.at(p).alloc.at(s).str()
             << "\"}\n";
        auto sums = vc_sums(net, cmp.results.at(p).alloc);
        for (const auto& [vc, r] : sums)
          os << R"({"kind":"vc","id":")" << detail::json_escape(vc) << R"(","policy":")"
             << policy_name(p) << R"(","rate_mbps":")" << r.str() << "\"}\n";
      }
      break;
    }
  }
  return os.str();
}

inline std::string access_flow_detail(const Network& net, const Link& l) {
  const auto& crossing = net.crossing[net.link_index.at(l.id)];
  if (crossing.empty()) return "";
  const SourceId& s = crossing.front();
  return net.vcs[net.vc_of_source.at(s)].id + "@access={" + s + "}";
}

/// Flow counts and membership per link.
inline std::string emit_flows(const Network& net, OutputFormat format) {
  std::ostringstream os;
  struct Row {
    LinkId link;
    int count;
    std::string detail;
  };
  std::vector<Row> rows;
  for (const auto& l : net.links) {
    if (net.crossing[net.link_index.at(l.id)].empty()) continue;
    Row row{l.id, count_flows(net, l.id), ""};
    if (l.from.kind == Endpoint::Kind::SwitchPort) {
      for (const auto& f : flows_at(net, l.from.id, l.from.port)) {
        if (!row.detail.empty()) row.detail += " ";
        row.detail += f.vc + "@" + std::to_string(f.in_port) + "={";
        for (size_t i = 0; i < f.members.size(); ++i)
          row.detail += (i ? "," : "") + f.members[i];
        row.detail += "}";
      }
    } else {
      row.detail = access_flow_detail(net, l);
    }
    rows.push_back(std::move(row));
  }

  switch (format) {
    case OutputFormat::Table: {
      size_t w = 8;
      for (const auto& r : rows) w = std::max(w, r.link.size() + 2);
      detail::pad(os, "link", w);
      detail::pad(os, "flows", 7);
      os << "members\n";
      for (const auto& r : rows) {
        detail::pad(os, r.link, w);
        detail::pad(os, std::to_string(r.count), 7);
        os << r.detail << "\n";
      }
      break;
    }
    case OutputFormat::Csv:
      os << "link,flows,members\n";
      for (const auto& r : rows) os << r.link << "," << r.count << "," << r.detail << "\n";
      break;
    case OutputFormat::JsonLines:
      for (const auto& r : rows)
        os << R"({"link":")" << detail::json_escape(r.link) << R"(","flows":)" << r.count
           << R"(,"members":")" << detail::json_escape(r.detail) << "\"}\n";
      break;
  }
  return os.str();
}

/// Allocation file: the csv form of emit_allocation, parsed back for verify.
inline std::optional<AllocationVector> parse_allocation_csv(const std::string& text,
                                                            std::string& error) {
  AllocationVector alloc;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.rfind("kind,", 0) == 0 || line.rfind("#", 0) == 0) continue;
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line + ",") {
      if (c == ',') { cols.push_back(cur); cur.clear(); }
      else cur += c;
    }
    if (cols.size() == 4 && cols[0] == "vc") continue;
    std::string id, rate;
    if (cols.size() == 4 && cols[0] == "source") { id = cols[1]; rate = cols[3]; }
    else if (cols.size() == 2) { id = cols[0]; rate = cols[1]; }
    else {
      error = "line " + std::to_string(lineno) + ": expected source,rate";
      return std::nullopt;
    }
    Rational r;
    if (!Rational::parse(rate, r)) {
      error = "line " + std::to_string(lineno) + ": malformed rational " + rate;
      return std::nullopt;
    }
    alloc.rates[id] = r;
  }
  return alloc;
}

}  // namespace mpfair
