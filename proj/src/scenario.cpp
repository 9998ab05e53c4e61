// SPDX-License-Identifier: Apache-2.0

#include "riscap/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "riscap/linalg.hpp"

namespace riscap {

std::vector<Vec3> build_ris_grid(int rows, int cols, double spacing_m) {
  if (rows < 1) throw config_error("ris.rows must be >= 1");
  if (cols < 1) throw config_error("ris.cols must be >= 1");
  if (!(spacing_m > 0.0)) throw config_error("ris.spacing_m must be > 0");
  std::vector<Vec3> pos;
  pos.reserve(static_cast<size_t>(rows) * cols);
  const double x0 = -0.5 * (cols - 1) * spacing_m;
  const double y0 = -0.5 * (rows - 1) * spacing_m;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      pos.emplace_back(x0 + c * spacing_m, y0 + r * spacing_m, 0.0);
  return pos;
}

Vec3 wavevector(double azimuth_rad, double elevation_rad, double wavelength_m) {
  if (!(wavelength_m > 0.0)) throw config_error("wavelength_m must be > 0");
  const double k0 = 2.0 * pi / wavelength_m;
  const double ce = std::cos(elevation_rad);
  return k0 * Vec3(ce * std::cos(azimuth_rad), ce * std::sin(azimuth_rad),
                   std::sin(elevation_rad));
}

namespace {

void check_positive(int v, const char* name) {
  if (v < 1) throw config_error(std::string(name) + " must be >= 1");
}

void check_spec(const AngularSpec& a, const std::string& where) {
  if (a.spread_rad < 0.0) throw config_error(where + ": angle spread must be >= 0");
}

}  // namespace

ScenarioConfig validate(ScenarioConfig c) {
  check_positive(c.num_txs, "system.num_txs");
  check_positive(c.num_riss, "system.num_riss");
  check_positive(c.nt, "system.nt");
  check_positive(c.nr, "system.nr");
  if (!(c.wavelength_m > 0.0)) throw config_error("system.wavelength_m must be > 0");
  if (std::isnan(c.snr_db)) throw config_error("system.snr_db is NaN");

  if (static_cast<int>(c.riss.size()) != c.num_riss)
    throw config_error("ris specs: expected one per RIS (num_riss mismatch)");
  if (static_cast<int>(c.incoming.size()) != c.num_riss)
    throw config_error("link specs: expected num_riss rows");

  int ns = 0;
  for (int k = 0; k < c.num_riss; ++k) {
    const RisSpec& r = c.riss[k];
    check_positive(r.rows, "ris.rows");
    check_positive(r.cols, "ris.cols");
    if (!(r.spacing_m > 0.0)) throw config_error("ris.spacing_m must be > 0");
    const int nsk = r.rows * r.cols;
    if (k == 0) ns = nsk;
    if (nsk != ns) throw config_error("ris grids must share one element count");
    if (r.mode == CorrelationMode::angular) check_spec(r.outgoing, "ris outgoing spectrum");
    if (static_cast<int>(c.incoming[k].size()) != c.num_txs)
      throw config_error("link specs: expected num_txs entries per RIS");
    for (int m = 0; m < c.num_txs; ++m) check_spec(c.incoming[k][m], "link spectrum");
  }
  if (c.ns != 0 && c.ns != ns)
    throw config_error("system.ns mismatch: ns must equal rows*cols");
  c.ns = ns;

  for (const ArraySpec* side : {&c.tx_side, &c.rx_side}) {
    if (side->mode == CorrelationMode::angular) {
      if (side->spacing_m < 0.0) throw config_error("array spacing_m must be >= 0");
      check_spec(side->angles, "tx/rx spectrum");
    }
  }

  if (!(c.solver.step > 0.0)) throw config_error("solver.step must be > 0");
  if (!(c.solver.tolerance > 0.0)) throw config_error("solver.tolerance must be > 0");
  if (!(c.solver.phase_tolerance > 0.0))
    throw config_error("solver.phase_tolerance must be > 0");
  if (c.solver.max_iters < 1) throw config_error("solver.max_iters must be >= 1");
  if (!(c.solver.damping > 0.0 && c.solver.damping <= 1.0))
    throw config_error("solver.damping must be in (0, 1]");
  if (c.mc.samples_mean < 2 || c.mc.samples_var < 2 || c.mc.samples_experiment < 2)
    throw config_error("montecarlo sample counts must be >= 2");
  if (c.quantization_bits && *c.quantization_bits < 1)
    throw config_error("quantization.bits must be >= 1");

  c.snr = db_to_linear(c.snr_db);
  c.direct_snr = db_to_linear(c.direct_snr_db);
  if (std::isnan(c.snr) || c.snr < 0.0) throw config_error("system.snr_db invalid");
  if (std::isnan(c.direct_snr) || c.direct_snr < 0.0)
    throw config_error("system.direct_snr_db invalid");

  c.beta_r = static_cast<double>(c.nr) / c.nt;
  c.beta_s = static_cast<double>(c.ns) / c.nt;
  if (!std::isfinite(c.beta_r) || !(c.beta_r > 0.0)) throw config_error("beta_r invalid");
  if (!std::isfinite(c.beta_s) || !(c.beta_s > 0.0)) throw config_error("beta_s invalid");

  c.positions.clear();
  c.q_out.clear();
  c.q_in.assign(c.num_riss, {});
  for (int k = 0; k < c.num_riss; ++k) {
    const RisSpec& r = c.riss[k];
    c.positions.push_back(build_ris_grid(r.rows, r.cols, r.spacing_m));
    c.q_out.push_back(
        wavevector(r.outgoing.azimuth_rad, r.outgoing.elevation_rad, c.wavelength_m));
    for (int m = 0; m < c.num_txs; ++m) {
      const AngularSpec& in = c.incoming[k][m];
      c.q_in[k].push_back(wavevector(in.azimuth_rad, in.elevation_rad, c.wavelength_m));
    }
  }

  c.validated = true;
  return c;
}

// ---------------------------------------------------------------------------
// Scenario file parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct KeyValue {
  std::string value;
  bool used = false;
};

using Section = std::map<std::string, KeyValue>;

struct RawScenario {
  std::map<std::string, Section> sections;

  Section* find(const std::string& name) {
    auto it = sections.find(name);
    return it == sections.end() ? nullptr : &it->second;
  }
};

RawScenario tokenize(const std::string& text) {
  RawScenario raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("scenario line " + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw config_error("scenario line " + std::to_string(lineno) + ": empty section name");
      raw.sections[section];  // created even if empty
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("scenario line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw config_error("scenario line " + std::to_string(lineno) + ": key outside any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw config_error("scenario line " + std::to_string(lineno) + ": empty key or value");
    auto [it, inserted] = raw.sections[section].emplace(key, KeyValue{value});
    if (!inserted)
      throw config_error("scenario: duplicate key '" + key + "' in [" + section + "]");
  }
  return raw;
}

double parse_double(const std::string& v, const std::string& where) {
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw config_error("scenario: cannot parse number '" + v + "' for " + where);
  }
}

int64_t parse_int(const std::string& v, const std::string& where) {
  try {
    size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw config_error("scenario: cannot parse integer '" + v + "' for " + where);
  }
}

/// Typed view over one section; records key usage for fail-closed checking.
class SectionReader {
 public:
  SectionReader(RawScenario& raw, std::string name) : name_(std::move(name)) {
    section_ = raw.find(name_);
  }

  bool exists() const { return section_ != nullptr; }

  std::optional<std::string> get(const std::string& key) {
    if (!section_) return std::nullopt;
    auto it = section_->find(key);
    if (it == section_->end()) return std::nullopt;
    it->second.used = true;
    return it->second.value;
  }

  double number(const std::string& key, double fallback) {
    auto v = get(key);
    return v ? parse_double(*v, name_ + "." + key) : fallback;
  }

  std::optional<double> number_opt(const std::string& key) {
    auto v = get(key);
    if (!v) return std::nullopt;
    return parse_double(*v, name_ + "." + key);
  }

  int integer(const std::string& key, int fallback) {
    auto v = get(key);
    return v ? static_cast<int>(parse_int(*v, name_ + "." + key)) : fallback;
  }

  std::optional<int> integer_opt(const std::string& key) {
    auto v = get(key);
    if (!v) return std::nullopt;
    return static_cast<int>(parse_int(*v, name_ + "." + key));
  }

  double require_number(const std::string& key) {
    auto v = get(key);
    if (!v) throw config_error("scenario: missing required key " + name_ + "." + key);
    return parse_double(*v, name_ + "." + key);
  }

  int require_integer(const std::string& key) {
    auto v = get(key);
    if (!v) throw config_error("scenario: missing required key " + name_ + "." + key);
    return static_cast<int>(parse_int(*v, name_ + "." + key));
  }

  std::vector<double> number_list(const std::string& key, std::vector<double> fallback) {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), name_ + "." + key));
    if (out.empty()) throw config_error("scenario: empty list for " + name_ + "." + key);
    return out;
  }

  std::vector<int> integer_list(const std::string& key, std::vector<int> fallback) {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<int> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(static_cast<int>(parse_int(trim(item), name_ + "." + key)));
    if (out.empty()) throw config_error("scenario: empty list for " + name_ + "." + key);
    return out;
  }

 private:
  std::string name_;
  Section* section_ = nullptr;
};

CorrelationMode parse_mode(SectionReader& sec, const std::string& section_name,
                           CorrelationMode fallback) {
  auto v = sec.get("correlation");
  if (!v) return fallback;
  if (*v == "identity") return CorrelationMode::identity;
  if (*v == "angular") return CorrelationMode::angular;
  throw config_error("scenario: " + section_name +
                     ".correlation must be 'identity' or 'angular', got '" + *v + "'");
}

AngularSpec read_angles(SectionReader& sec, const std::string& prefix, AngularSpec fallback) {
  AngularSpec a = fallback;
  if (auto v = sec.number_opt(prefix + "azimuth_deg")) a.azimuth_rad = deg_to_rad(*v);
  if (auto v = sec.number_opt(prefix + "elevation_deg")) a.elevation_rad = deg_to_rad(*v);
  if (auto v = sec.number_opt(prefix + "spread_deg")) a.spread_rad = deg_to_rad(*v);
  return a;
}

ArraySpec read_array_side(RawScenario& raw, const std::string& name) {
  ArraySpec side;
  SectionReader sec(raw, name);
  if (!sec.exists()) return side;
  side.mode = parse_mode(sec, name, CorrelationMode::identity);
  side.spacing_m = sec.number("spacing_m", 0.0);
  side.angles = read_angles(sec, "", AngularSpec{});
  return side;
}

void check_all_used(const RawScenario& raw, const std::set<std::string>& known_sections) {
  for (const auto& [name, section] : raw.sections) {
    if (!known_sections.count(name))
      throw config_error("scenario: unknown section [" + name + "]");
    for (const auto& [key, kv] : section)
      if (!kv.used)
        throw config_error("scenario: unknown key '" + key + "' in [" + name + "]");
  }
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  RawScenario raw = tokenize(text);
  std::set<std::string> known = {"system", "ris",    "link",       "tx",
                                 "rx",     "solver", "montecarlo", "quantization",
                                 "experiment"};

  ScenarioConfig c;

  SectionReader system(raw, "system");
  if (!system.exists()) throw config_error("scenario: missing [system] section");
  c.num_txs = system.require_integer("num_txs");
  c.num_riss = system.require_integer("num_riss");
  c.nt = system.require_integer("nt");
  c.nr = system.require_integer("nr");
  c.ns = system.integer("ns", 0);
  c.snr_db = system.require_number("snr_db");
  c.direct_snr_db = system.number("direct_snr_db", -std::numeric_limits<double>::infinity());
  c.wavelength_m = system.require_number("wavelength_m");
  if (auto v = system.integer_opt("seed")) c.seed = static_cast<uint64_t>(*v);

  if (c.num_riss < 1 || c.num_riss > 64) throw config_error("system.num_riss out of range");
  if (c.num_txs < 1 || c.num_txs > 64) throw config_error("system.num_txs out of range");

  // RIS defaults plus per-k overrides.
  SectionReader ris_default(raw, "ris");
  if (!ris_default.exists()) throw config_error("scenario: missing [ris] section");
  RisSpec base;
  base.rows = ris_default.integer("rows", 0);
  base.cols = ris_default.integer("cols", 0);
  base.spacing_m = ris_default.number("spacing_m", 0.0);
  base.mode = parse_mode(ris_default, "ris", CorrelationMode::angular);
  base.outgoing = read_angles(ris_default, "out_", AngularSpec{});

  for (int k = 1; k <= c.num_riss; ++k) {
    const std::string name = "ris." + std::to_string(k);
    known.insert(name);
    RisSpec r = base;
    SectionReader sec(raw, name);
    if (sec.exists()) {
      r.rows = sec.integer("rows", r.rows);
      r.cols = sec.integer("cols", r.cols);
      r.spacing_m = sec.number("spacing_m", r.spacing_m);
      r.mode = parse_mode(sec, name, r.mode);
      r.outgoing = read_angles(sec, "out_", r.outgoing);
    }
    c.riss.push_back(r);
  }

  // Incoming angular specs: [link] defaults, [link.k] per-RIS, [link.k.m] per pair.
  SectionReader link_default(raw, "link");
  AngularSpec link_base = link_default.exists()
                              ? read_angles(link_default, "in_", AngularSpec{})
                              : AngularSpec{};
  c.incoming.assign(c.num_riss, std::vector<AngularSpec>(c.num_txs, link_base));
  for (int k = 1; k <= c.num_riss; ++k) {
    const std::string kname = "link." + std::to_string(k);
    known.insert(kname);
    SectionReader ksec(raw, kname);
    AngularSpec krow = ksec.exists() ? read_angles(ksec, "in_", link_base) : link_base;
    for (int m = 1; m <= c.num_txs; ++m) {
      const std::string name = kname + "." + std::to_string(m);
      known.insert(name);
      SectionReader sec(raw, name);
      c.incoming[k - 1][m - 1] = sec.exists() ? read_angles(sec, "in_", krow) : krow;
    }
  }

  c.tx_side = read_array_side(raw, "tx");
  c.rx_side = read_array_side(raw, "rx");

  SectionReader solver(raw, "solver");
  c.solver.step = solver.number("step", c.solver.step);
  c.solver.tolerance = solver.number("tolerance", c.solver.tolerance);
  c.solver.phase_tolerance = solver.number("phase_tolerance", c.solver.phase_tolerance);
  c.solver.max_iters = solver.integer("max_iters", c.solver.max_iters);
  c.solver.damping = solver.number("damping", c.solver.damping);

  SectionReader mc(raw, "montecarlo");
  c.mc.samples_mean = mc.integer("samples_mean", c.mc.samples_mean);
  c.mc.samples_var = mc.integer("samples_var", c.mc.samples_var);
  c.mc.samples_experiment = mc.integer("samples_experiment", c.mc.samples_experiment);

  SectionReader quant(raw, "quantization");
  if (auto v = quant.integer_opt("bits")) c.quantization_bits = *v;

  SectionReader grids(raw, "experiment");
  c.grids.sigma_grid_deg = grids.number_list("sigma_grid_deg", c.grids.sigma_grid_deg);
  c.grids.phi_max_grid_deg = grids.number_list("phi_max_grid_deg", c.grids.phi_max_grid_deg);
  c.grids.tx_counts = grids.integer_list("tx_counts", c.grids.tx_counts);
  c.grids.mu_points = grids.integer("mu_points", c.grids.mu_points);
  c.grids.cdf_points = grids.integer("cdf_points", c.grids.cdf_points);

  check_all_used(raw, known);
  return validate(std::move(c));
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

namespace {

void append_kv(std::string& out, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s = %.17g\n", key, v);
  out += buf;
}

void append_kv(std::string& out, const char* key, int64_t v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s = %" PRId64 "\n", key, v);
  out += buf;
}

}  // namespace

std::string canonical_scenario_text(const ScenarioConfig& c) {
  std::string out;
  out += "[system]\n";
  append_kv(out, "num_txs", static_cast<int64_t>(c.num_txs));
  append_kv(out, "num_riss", static_cast<int64_t>(c.num_riss));
  append_kv(out, "nt", static_cast<int64_t>(c.nt));
  append_kv(out, "nr", static_cast<int64_t>(c.nr));
  append_kv(out, "ns", static_cast<int64_t>(c.ns));
  append_kv(out, "snr_db", c.snr_db);
  append_kv(out, "direct_snr_db", c.direct_snr_db);
  append_kv(out, "wavelength_m", c.wavelength_m);
  append_kv(out, "seed", static_cast<int64_t>(c.seed));
  out += "[ris]\n";  // defaults section; per-k sections carry the values
  for (int k = 0; k < c.num_riss; ++k) {
    const RisSpec& r = c.riss[k];
    out += "[ris." + std::to_string(k + 1) + "]\n";
    append_kv(out, "rows", static_cast<int64_t>(r.rows));
    append_kv(out, "cols", static_cast<int64_t>(r.cols));
    append_kv(out, "spacing_m", r.spacing_m);
    out += std::string("correlation = ") +
           (r.mode == CorrelationMode::identity ? "identity" : "angular") + "\n";
    append_kv(out, "out_azimuth_deg", rad_to_deg(r.outgoing.azimuth_rad));
    append_kv(out, "out_elevation_deg", rad_to_deg(r.outgoing.elevation_rad));
    append_kv(out, "out_spread_deg", rad_to_deg(r.outgoing.spread_rad));
    for (int m = 0; m < c.num_txs; ++m) {
      const AngularSpec& in = c.incoming[k][m];
      out += "[link." + std::to_string(k + 1) + "." + std::to_string(m + 1) + "]\n";
      append_kv(out, "in_azimuth_deg", rad_to_deg(in.azimuth_rad));
      append_kv(out, "in_elevation_deg", rad_to_deg(in.elevation_rad));
      append_kv(out, "in_spread_deg", rad_to_deg(in.spread_rad));
    }
  }
  for (const auto& [name, side] : {std::pair<const char*, const ArraySpec&>{"tx", c.tx_side},
                                   {"rx", c.rx_side}}) {
    out += std::string("[") + name + "]\n";
    out += std::string("correlation = ") +
           (side.mode == CorrelationMode::identity ? "identity" : "angular") + "\n";
    if (side.mode == CorrelationMode::angular) {
      append_kv(out, "spacing_m", side.spacing_m);
      append_kv(out, "azimuth_deg", rad_to_deg(side.angles.azimuth_rad));
      append_kv(out, "elevation_deg", rad_to_deg(side.angles.elevation_rad));
      append_kv(out, "spread_deg", rad_to_deg(side.angles.spread_rad));
    }
  }
  out += "[solver]\n";
  append_kv(out, "step", c.solver.step);
  append_kv(out, "tolerance", c.solver.tolerance);
  append_kv(out, "phase_tolerance", c.solver.phase_tolerance);
  append_kv(out, "max_iters", static_cast<int64_t>(c.solver.max_iters));
  append_kv(out, "damping", c.solver.damping);
  out += "[montecarlo]\n";
  append_kv(out, "samples_mean", static_cast<int64_t>(c.mc.samples_mean));
  append_kv(out, "samples_var", static_cast<int64_t>(c.mc.samples_var));
  append_kv(out, "samples_experiment", static_cast<int64_t>(c.mc.samples_experiment));
  if (c.quantization_bits) {
    out += "[quantization]\n";
    append_kv(out, "bits", static_cast<int64_t>(*c.quantization_bits));
  }
  return out;
}

std::string scenario_hash(const ScenarioConfig& c) {
  const std::string text = canonical_scenario_text(c);
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

InputCovariance make_input_covariance(const ScenarioConfig& c) {
  if (!c.validated) throw config_error("make_input_covariance: config not validated");
  InputCovariance q;
  const MatC eye = MatC::Identity(c.nt, c.nt);
  q.q.assign(c.num_txs, c.snr * eye);
  q.q_sqrt.assign(c.num_txs, std::sqrt(c.snr) * eye);
  return q;
}

InputCovariance make_input_covariance(std::vector<MatC> qs) {
  InputCovariance q;
  q.q = std::move(qs);
  for (const MatC& m : q.q) q.q_sqrt.push_back(matrix_sqrt_hermitian(m));
  return q;
}

}  // namespace riscap
