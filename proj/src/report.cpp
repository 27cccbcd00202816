#include "groupcf/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "groupcf/csv.hpp"
#include "groupcf/error.hpp"

namespace groupcf {

namespace {

constexpr int kCell = 22;
constexpr const char* kOn = "#3a9d5d";
constexpr const char* kOff = "#ffffff";
constexpr const char* kGrid = "#b0b0b0";
constexpr const char* kChanged = "#c0392b";

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

SolveStatus status_from_string(const std::string& s) {
  for (auto st : {SolveStatus::optimal, SolveStatus::feasible, SolveStatus::infeasible,
                  SolveStatus::no_incumbent}) {
    if (to_string(st) == s) return st;
  }
  throw Error(Errc::missing_field, "unknown solve status '" + s + "'");
}

std::string svg_open(int width, int height) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  return out.str();
}

}  // namespace

Heatmap make_heatmap(const GroupExplanation& result, const FeatureSchema& schema) {
  Heatmap h;
  for (std::size_t c = 0; c < schema.expanded_size(); ++c) {
    h.labels.push_back(schema.column_label(c));
    h.groups.push_back(schema.features()[schema.owner(c)].name);
  }
  h.covered.assign(result.columns.size(), 0);
  for (std::size_t k : result.assignment) ++h.covered.at(k);
  for (const Column& col : result.columns) {
    h.rows.push_back(col.values);
    std::vector<bool> changed(schema.expanded_size(), false);
    for (std::size_t l : col.features) {
      const FeatureGroup& g = schema.group(l);
      for (std::size_t c = g.begin; c < g.end(); ++c) changed[c] = true;
    }
    h.changed.push_back(std::move(changed));
  }
  return h;
}

std::string heatmap_csv(const Heatmap& h) {
  std::ostringstream out;
  csv::Row header{"explanation", "instances"};
  header.insert(header.end(), h.labels.begin(), h.labels.end());
  header.push_back("changed");
  out << csv::join(header) << '\n';
  for (std::size_t k = 0; k < h.rows.size(); ++k) {
    csv::Row row{std::to_string(k + 1), std::to_string(h.covered[k])};
    std::vector<std::string> changed;
    for (std::size_t c = 0; c < h.labels.size(); ++c) {
      row.push_back(h.rows[k][c] ? "1" : "0");
      if (h.changed[k][c] && (changed.empty() || changed.back() != h.groups[c])) {
        changed.push_back(h.groups[c]);
      }
    }
    std::string joined;
    for (const auto& name : changed) joined += (joined.empty() ? "" : ";") + name;
    row.push_back(joined);
    out << csv::join(row) << '\n';
  }
  return out.str();
}

std::string heatmap_svg(const Heatmap& h) {
  const int cols = static_cast<int>(h.labels.size());
  const int rows = static_cast<int>(h.rows.size());
  std::size_t longest = 0;
  for (const auto& l : h.labels) longest = std::max(longest, l.size());
  const int left = 90;
  const int top = 20 + static_cast<int>(longest) * 6;
  const int width = left + cols * kCell + 20;
  const int height = top + rows * kCell + 30;

  std::ostringstream out;
  out << svg_open(width, height);
  for (int c = 0; c < cols; ++c) {
    const int x = left + c * kCell + kCell / 2 + 4;
    out << "<text x=\"" << x << "\" y=\"" << top - 6 << "\" transform=\"rotate(-60 " << x << ' '
        << top - 6 << ")\">" << xml_escape(h.labels[c]) << "</text>\n";
  }
  for (int k = 0; k < rows; ++k) {
    const int y = top + k * kCell;
    out << "<text x=\"4\" y=\"" << y + kCell - 7 << "\">E" << k + 1 << " (" << h.covered[k]
        << ")</text>\n";
    for (int c = 0; c < cols; ++c) {
      out << "<rect x=\"" << left + c * kCell << "\" y=\"" << y << "\" width=\"" << kCell
          << "\" height=\"" << kCell << "\" fill=\"" << (h.rows[k][c] ? kOn : kOff)
          << "\" stroke=\"" << kGrid << "\"/>\n";
    }
    // Outline each changed feature group on this row.
    for (int c = 0; c < cols;) {
      if (!h.changed[k][c]) {
        ++c;
        continue;
      }
      int e = c;
      while (e < cols && h.changed[k][e] && h.groups[e] == h.groups[c]) ++e;
      out << "<rect x=\"" << left + c * kCell + 1 << "\" y=\"" << y + 1 << "\" width=\""
          << (e - c) * kCell - 2 << "\" height=\"" << kCell - 2 << "\" fill=\"none\" stroke=\""
          << kChanged << "\" stroke-width=\"2\"/>\n";
      c = e;
    }
  }
  for (int c = 1; c < cols; ++c) {
    if (h.groups[c] == h.groups[c - 1]) continue;
    const int x = left + c * kCell;
    out << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\""
        << top + rows * kCell << "\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
  }
  out << "<text x=\"" << left << "\" y=\"" << height - 10 << "\">filled: value 1; outlined: changed feature</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::vector<FeatureFrequency> feature_frequencies(const GroupExplanation& result,
                                                  const FeatureSchema& schema) {
  std::vector<FeatureFrequency> freq;
  for (const auto& f : schema.features()) freq.push_back({f.name, 0, 0});
  for (const Column& col : result.columns) {
    for (std::size_t l : col.features) {
      ++freq.at(l).explanations;
      freq[l].instances += col.covered_count();
    }
  }
  return freq;
}

std::string frequency_csv(const std::vector<FeatureFrequency>& freq) {
  std::ostringstream out;
  out << "feature,explanations,instances\n";
  for (const auto& f : freq) {
    out << csv::join({f.feature, std::to_string(f.explanations), std::to_string(f.instances)})
        << '\n';
  }
  return out.str();
}

std::string frequency_svg(const std::vector<FeatureFrequency>& freq) {
  const int bar = 16;
  const int gap = 6;
  const int left = 130;
  const int panel = 220;
  const int top = 30;
  const int rows = static_cast<int>(freq.size());
  const int width = left + 2 * (panel + 60);
  const int height = top + rows * (bar + gap) + 20;
  std::size_t max_e = 1, max_i = 1;
  for (const auto& f : freq) {
    max_e = std::max(max_e, f.explanations);
    max_i = std::max(max_i, f.instances);
  }

  std::ostringstream out;
  out << svg_open(width, height);
  out << "<text x=\"" << left << "\" y=\"18\">explanations</text>\n";
  out << "<text x=\"" << left + panel + 60 << "\" y=\"18\">covered instances</text>\n";
  for (int r = 0; r < rows; ++r) {
    const auto& f = freq[r];
    const int y = top + r * (bar + gap);
    out << "<text x=\"4\" y=\"" << y + bar - 4 << "\">" << xml_escape(f.feature) << "</text>\n";
    const int we = static_cast<int>(f.explanations * panel / max_e);
    const int wi = static_cast<int>(f.instances * panel / max_i);
    out << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << we << "\" height=\"" << bar
        << "\" fill=\"#4a78b5\"/>\n";
    out << "<text x=\"" << left + we + 4 << "\" y=\"" << y + bar - 4 << "\">" << f.explanations
        << "</text>\n";
    const int x2 = left + panel + 60;
    out << "<rect x=\"" << x2 << "\" y=\"" << y << "\" width=\"" << wi << "\" height=\"" << bar
        << "\" fill=\"#e08a3c\"/>\n";
    out << "<text x=\"" << x2 + wi + 4 << "\" y=\"" << y + bar - 4 << "\">" << f.instances
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

nlohmann::json explanation_to_json(const GroupExplanation& result, const FeatureSchema& schema) {
  nlohmann::json columns = nlohmann::json::array();
  for (const Column& col : result.columns) {
    nlohmann::json c = column_to_json(col);
    nlohmann::json names = nlohmann::json::array();
    for (std::size_t l : col.features) names.push_back(schema.features().at(l).name);
    c["feature_names"] = names;
    columns.push_back(std::move(c));
  }
  return {{"objective", result.objective}, {"bound", result.bound},
          {"status", to_string(result.status)}, {"limit_reason", result.limit_reason},
          {"nodes", result.nodes}, {"columns", columns}, {"assignment", result.assignment}};
}

GroupExplanation explanation_from_json(const nlohmann::json& doc) {
  try {
    GroupExplanation g;
    for (const auto& c : doc.at("columns")) g.columns.push_back(column_from_json(c));
    g.assignment = doc.at("assignment").get<std::vector<std::size_t>>();
    g.objective = doc.at("objective").get<std::size_t>();
    g.bound = doc.value("bound", 0.0);
    g.status = status_from_string(doc.value("status", std::string("feasible")));
    g.limit_reason = doc.value("limit_reason", std::string());
    g.nodes = doc.value("nodes", std::size_t{0});
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::missing_field, std::string("malformed explanation: ") + e.what());
  }
}

nlohmann::json result_to_json(const ResultDocument& doc) {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& inst : doc.instances.instances) {
    instances.push_back({{"id", inst.source_id}, {"values", inst.values}});
  }
  return {{"method", doc.method},
          {"tmax", doc.tmax},
          {"schema", schema_to_json(*doc.schema)},
          {"model", model_to_json(*doc.model)},
          {"instances", instances},
          {"explanation", explanation_to_json(doc.explanation, *doc.schema)}};
}

ResultDocument result_from_json(const nlohmann::json& doc) {
  try {
    ResultDocument out;
    out.schema = std::make_shared<const FeatureSchema>(schema_from_json(doc.at("schema")));
    out.model = std::make_shared<const ClassifierModel>(model_from_json(doc.at("model")));
    std::vector<BinaryInstance> instances;
    for (const auto& inst : doc.at("instances")) {
      instances.push_back({inst.at("values").get<BitVector>(), inst.at("id").get<std::string>()});
    }
    out.instances = make_instance_set(out.schema, std::move(instances));
    out.tmax = doc.at("tmax").get<std::size_t>();
    out.method = doc.value("method", std::string());
    out.explanation = explanation_from_json(doc.at("explanation"));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::missing_field, std::string("malformed result document: ") + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_failure, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(Errc::io_failure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io_failure, "cannot rename onto " + path.string() + ": " + ec.message());
}

}  // namespace groupcf
