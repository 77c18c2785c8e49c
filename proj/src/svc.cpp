#include "pentrace/svc.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pentrace {

namespace {

using nlohmann::json;

// One whitespace-separated integer token; returns false on anything else.
bool parse_int_token(std::string_view tok, long long& out) {
  if (tok.empty()) return false;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

Session parse_svc(std::string_view text, double tick_rate) {
  if (tick_rate <= 0) throw std::invalid_argument("tick_rate must be positive");

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == text.size()) break;
    start = nl + 1;
  }
  // drop trailing blank lines (a canonical file ends with one newline)
  while (!lines.empty() && split_ws(lines.back()).empty()) lines.pop_back();

  if (lines.empty()) throw SvcError(1, "empty file");

  const auto header = split_ws(lines[0]);
  long long declared = 0;
  if (header.size() != 1 || !parse_int_token(header[0], declared) || declared < 0)
    throw SvcError(1, "header must be a single non-negative sample count");
  if (static_cast<long long>(lines.size()) - 1 != declared)
    throw SvcError(lines.size() > static_cast<std::size_t>(declared) + 1
                       ? static_cast<std::size_t>(declared) + 2
                       : lines.size() + 1,
                   "sample count mismatch: header declares " + std::to_string(declared) +
                       ", file has " + std::to_string(lines.size() - 1) + " data lines");

  Session session;
  session.tick_rate = tick_rate;
  session.samples.reserve(static_cast<std::size_t>(declared));

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;  // 1-based, header is line 1
    const auto toks = split_ws(lines[li]);
    if (toks.size() != 7)
      throw SvcError(line_no, "expected 7 columns (x y t pen_status azimuth tilt pressure), got " +
                                  std::to_string(toks.size()));
    long long v[7];
    for (int c = 0; c < 7; ++c) {
      if (!parse_int_token(toks[c], v[c]))
        throw SvcError(line_no, "column " + std::to_string(c + 1) + " is not an integer");
    }
    if (v[3] != 0 && v[3] != 1)
      throw SvcError(line_no, "pen_status must be 0 or 1, got " + std::to_string(v[3]));
    if (!session.samples.empty() && v[2] <= session.samples.back().t_ticks)
      throw SvcError(line_no, "timestamp not strictly increasing");

    Sample s;
    s.x = static_cast<double>(v[0]);
    s.y = static_cast<double>(v[1]);
    s.t_ticks = v[2];
    s.t = static_cast<double>(v[2]) / tick_rate;
    s.pen_status = static_cast<int>(v[3]);
    s.azimuth = static_cast<double>(v[4]);
    s.tilt = static_cast<double>(v[5]);
    s.pressure = static_cast<double>(v[6]);
    session.samples.push_back(s);
  }
  return session;
}

std::string serialize_svc(const Session& session) {
  std::string out;
  out += std::to_string(session.samples.size());
  out += '\n';
  for (const Sample& s : session.samples) {
    out += std::to_string(std::llround(s.x));
    out += ' ';
    out += std::to_string(std::llround(s.y));
    out += ' ';
    out += std::to_string(s.t_ticks);
    out += ' ';
    out += std::to_string(s.pen_status);
    out += ' ';
    out += std::to_string(std::llround(s.azimuth));
    out += ' ';
    out += std::to_string(std::llround(s.tilt));
    out += ' ';
    out += std::to_string(std::llround(s.pressure));
    out += '\n';
  }
  return out;
}

std::string serialize_sidecar(const Session& session) {
  json j;
  j["subject_id"] = session.subject_id;
  if (session.sex) j["sex"] = to_string(*session.sex);
  if (session.class_year) j["class_year"] = *session.class_year;
  if (session.diagnosis) j["diagnosis"] = to_string(*session.diagnosis);
  if (session.hpsqc) {
    j["hpsqc"] = {{"legibility", session.hpsqc->legibility},
                  {"performance_time", session.hpsqc->performance_time},
                  {"well_being", session.hpsqc->well_being},
                  {"total", session.hpsqc->total}};
  }
  j["tick_rate"] = session.tick_rate;
  if (session.units_per_mm) j["units_per_mm"] = *session.units_per_mm;
  j["sampling_rate"] = session.sampling_rate;
  return j.dump(2) + "\n";
}

void apply_sidecar(Session& session, std::string_view json_text) {
  json j = json::parse(json_text);
  if (j.contains("subject_id")) session.subject_id = j["subject_id"].get<std::string>();
  if (j.contains("sex")) {
    auto s = sex_from_string(j["sex"].get<std::string>());
    if (!s) throw std::runtime_error("sidecar: unknown sex value");
    session.sex = s;
  }
  if (j.contains("class_year")) session.class_year = j["class_year"].get<int>();
  if (j.contains("diagnosis")) {
    auto d = diagnosis_from_string(j["diagnosis"].get<std::string>());
    if (!d) throw std::runtime_error("sidecar: unknown diagnosis value");
    session.diagnosis = d;
  }
  if (j.contains("hpsqc")) {
    const auto& h = j["hpsqc"];
    HpsqcScore score;
    score.legibility = h.at("legibility").get<int>();
    score.performance_time = h.at("performance_time").get<int>();
    score.well_being = h.at("well_being").get<int>();
    score.total = h.value("total", score.legibility + score.performance_time + score.well_being);
    if (!score.consistent()) throw std::runtime_error("sidecar: inconsistent hpsqc score");
    session.hpsqc = score;
  }
  if (j.contains("sampling_rate")) session.sampling_rate = j["sampling_rate"].get<double>();
  if (j.contains("units_per_mm")) session.units_per_mm = j["units_per_mm"].get<double>();
}

Session load_session(const std::filesystem::path& svc_path) {
  auto sidecar_path = svc_path;
  sidecar_path.replace_extension(".json");

  double tick_rate = 1000.0;
  std::string sidecar_text;
  const bool have_sidecar = std::filesystem::exists(sidecar_path);
  if (have_sidecar) {
    sidecar_text = read_file(sidecar_path);
    json j = json::parse(sidecar_text);
    if (j.contains("tick_rate")) tick_rate = j["tick_rate"].get<double>();
  }

  Session session = parse_svc(read_file(svc_path), tick_rate);
  if (have_sidecar) apply_sidecar(session, sidecar_text);
  if (session.subject_id.empty()) session.subject_id = svc_path.stem().string();
  return session;
}

void save_session(const Session& session, const std::filesystem::path& svc_path) {
  write_file(svc_path, serialize_svc(session));
  auto sidecar_path = svc_path;
  sidecar_path.replace_extension(".json");
  write_file(sidecar_path, serialize_sidecar(session));
}

}  // namespace pentrace
