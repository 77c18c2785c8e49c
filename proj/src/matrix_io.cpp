#include <charconv>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "pentrace/features.hpp"

namespace pentrace {

namespace {

using nlohmann::json;

// shortest round-trip representation
std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad numeric value '" + std::string(s) + "' in " + context);
  return v;
}

const std::vector<std::string>& meta_columns() {
  static const std::vector<std::string> cols = {
      "subject_id",        "sex",          "class_year", "diagnosis",
      "hpsqc_legibility",  "hpsqc_performance_time",     "hpsqc_well_being",
      "hpsqc_total"};
  return cols;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace

std::string matrix_to_csv(const FeatureMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < meta_columns().size(); ++i) {
    if (i) out += ',';
    out += meta_columns()[i];
  }
  for (const auto& c : m.columns) {
    out += ',';
    out += c;
  }
  out += '\n';

  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const RowMeta& meta = m.meta[r];
    out += meta.subject_id;
    out += ',';
    if (meta.sex) out += to_string(*meta.sex);
    out += ',';
    if (meta.class_year) out += std::to_string(*meta.class_year);
    out += ',';
    if (meta.diagnosis) out += to_string(*meta.diagnosis);
    out += ',';
    if (meta.hpsqc) out += std::to_string(meta.hpsqc->legibility);
    out += ',';
    if (meta.hpsqc) out += std::to_string(meta.hpsqc->performance_time);
    out += ',';
    if (meta.hpsqc) out += std::to_string(meta.hpsqc->well_being);
    out += ',';
    if (meta.hpsqc) out += std::to_string(meta.hpsqc->total);
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
      out += ',';
      if (!m.is_missing(r, c)) out += fmt_double(m.values[r][c]);
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix matrix_from_csv(std::string_view csv) {
  FeatureMatrix m;
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    std::size_t nl = csv.find('\n', start);
    if (nl == std::string_view::npos) nl = csv.size();
    std::string_view line = csv.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) throw std::runtime_error("empty feature CSV");

  const auto header = split_csv_line(lines[0]);
  const std::size_t n_meta = meta_columns().size();
  if (header.size() < n_meta)
    throw std::runtime_error("feature CSV header lacks the metadata columns");
  for (std::size_t i = 0; i < n_meta; ++i) {
    if (header[i] != meta_columns()[i])
      throw std::runtime_error("feature CSV header: expected column '" + meta_columns()[i] +
                               "', got '" + header[i] + "'");
  }
  m.columns.assign(header.begin() + static_cast<long>(n_meta), header.end());

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_csv_line(lines[li]);
    if (fields.size() != header.size())
      throw std::runtime_error("feature CSV row " + std::to_string(li + 1) +
                               ": field count mismatch");
    RowMeta meta;
    meta.subject_id = fields[0];
    if (!fields[1].empty()) {
      meta.sex = sex_from_string(fields[1]);
      if (!meta.sex) throw std::runtime_error("bad sex value '" + fields[1] + "'");
    }
    if (!fields[2].empty())
      meta.class_year = static_cast<int>(parse_double(fields[2], "class_year"));
    if (!fields[3].empty()) {
      meta.diagnosis = diagnosis_from_string(fields[3]);
      if (!meta.diagnosis) throw std::runtime_error("bad diagnosis value '" + fields[3] + "'");
    }
    if (!fields[4].empty()) {
      HpsqcScore h;
      h.legibility = static_cast<int>(parse_double(fields[4], "hpsqc"));
      h.performance_time = static_cast<int>(parse_double(fields[5], "hpsqc"));
      h.well_being = static_cast<int>(parse_double(fields[6], "hpsqc"));
      h.total = static_cast<int>(parse_double(fields[7], "hpsqc"));
      meta.hpsqc = h;
    }
    std::vector<double> row(m.columns.size(), FeatureMatrix::kMissing);
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      const std::string& f = fields[n_meta + c];
      if (!f.empty()) row[c] = parse_double(f, "column " + m.columns[c]);
    }
    m.meta.push_back(std::move(meta));
    m.values.push_back(std::move(row));
  }
  return m;
}

std::string matrix_to_json(const FeatureMatrix& m) {
  json j;
  j["columns"] = m.columns;
  json rows = json::array();
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    json row;
    const RowMeta& meta = m.meta[r];
    row["subject_id"] = meta.subject_id;
    if (meta.sex) row["sex"] = to_string(*meta.sex);
    if (meta.class_year) row["class_year"] = *meta.class_year;
    if (meta.diagnosis) row["diagnosis"] = to_string(*meta.diagnosis);
    if (meta.hpsqc)
      row["hpsqc"] = {{"legibility", meta.hpsqc->legibility},
                      {"performance_time", meta.hpsqc->performance_time},
                      {"well_being", meta.hpsqc->well_being},
                      {"total", meta.hpsqc->total}};
    json vals = json::array();
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
      if (m.is_missing(r, c))
        vals.push_back(nullptr);
      else
        vals.push_back(m.values[r][c]);
    }
    row["values"] = std::move(vals);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

FeatureMatrix matrix_from_json(std::string_view json_text) {
  const json j = json::parse(json_text);
  FeatureMatrix m;
  m.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    RowMeta meta;
    meta.subject_id = row.at("subject_id").get<std::string>();
    if (row.contains("sex")) meta.sex = sex_from_string(row["sex"].get<std::string>());
    if (row.contains("class_year")) meta.class_year = row["class_year"].get<int>();
    if (row.contains("diagnosis"))
      meta.diagnosis = diagnosis_from_string(row["diagnosis"].get<std::string>());
    if (row.contains("hpsqc")) {
      HpsqcScore h;
      h.legibility = row["hpsqc"].at("legibility").get<int>();
      h.performance_time = row["hpsqc"].at("performance_time").get<int>();
      h.well_being = row["hpsqc"].at("well_being").get<int>();
      h.total = row["hpsqc"].at("total").get<int>();
      meta.hpsqc = h;
    }
    std::vector<double> vals(m.columns.size(), FeatureMatrix::kMissing);
    const auto& jv = row.at("values");
    if (jv.size() != m.columns.size())
      throw std::runtime_error("feature JSON: row width mismatch");
    for (std::size_t c = 0; c < vals.size(); ++c)
      if (!jv[c].is_null()) vals[c] = jv[c].get<double>();
    m.meta.push_back(std::move(meta));
    m.values.push_back(std::move(vals));
  }
  return m;
}

std::string catalog_json() {
  json arr = json::array();
  for (const auto& e : feature_catalog()) {
    json j;
    j["name"] = e.name;
    j["signal"] = e.signal;
    j["projection"] = e.projection;
    j["surface"] = to_string(e.surface);
    j["aggregation"] = to_string(e.aggregation);
    j["unit"] = e.unit;
    j["description"] = e.description;
    j["nonstandard"] = e.nonstandard;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace pentrace
