#include "ksblow/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "ksblow/errors.hpp"

namespace ksblow {
namespace {

struct Token {
  enum Kind { Word, String, LBrace, RBrace, Equals, Comma, End } kind;
  std::string text;
  int line;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError({"line " + std::to_string(line) + ": " + msg});
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '{') {
      out.push_back({Token::LBrace, "{", line});
      ++i;
    } else if (c == '}') {
      out.push_back({Token::RBrace, "}", line});
      ++i;
    } else if (c == '=') {
      out.push_back({Token::Equals, "=", line});
      ++i;
    } else if (c == ',') {
      out.push_back({Token::Comma, ",", line});
      ++i;
    } else if (c == '"') {
      std::string s;
      ++i;
      while (true) {
        if (i >= text.size() || text[i] == '\n') fail("unterminated string");
        if (text[i] == '"') break;
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        s += text[i++];
      }
      ++i;
      out.push_back({Token::String, s, line});
    } else {
      std::string s;
      while (i < text.size()) {
        const char d = text[i];
        if (std::isspace(static_cast<unsigned char>(d)) || d == '{' || d == '}' || d == '=' || d == ',' ||
            d == '#' || d == '"')
          break;
        s += d;
        ++i;
      }
      out.push_back({Token::Word, s, line});
    }
  }
  out.push_back({Token::End, "", line});
  return out;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string to_string(DataKind k) { return k == DataKind::Concentrated ? "concentrated" : "homogeneous"; }

// Typed access to a parsed document; collects every problem before throwing.
class Reader {
 public:
  Reader(const ConfigDocument& doc, std::vector<std::string>& issues) : doc_(doc), issues_(issues) {}

  const ConfigDocument::Entry* find(const std::string& block, const std::string& key) {
    used_[block].insert(key);
    const auto b = doc_.blocks.find(block);
    if (b == doc_.blocks.end()) return nullptr;
    const auto e = b->second.find(key);
    return e == b->second.end() ? nullptr : &e->second;
  }

  const ConfigDocument::Entry* scalar(const std::string& block, const std::string& key) {
    const auto* e = find(block, key);
    if (e && e->values.size() != 1) {
      issue(block, key, "expected a single value");
      return nullptr;
    }
    return e;
  }

  void number(const std::string& block, const std::string& key, double& out) {
    if (const auto* e = scalar(block, key)) {
      if (auto v = parse_number(e->values[0]))
        out = *v;
      else
        issue(block, key, "not a number: '" + e->values[0] + "'");
    }
  }

  void optional_number(const std::string& block, const std::string& key, std::optional<double>& out) {
    double v = 0.0;
    if (find(block, key)) {
      number(block, key, v);
      out = v;
    }
  }

  template <class Int>
  void integer(const std::string& block, const std::string& key, Int& out) {
    double v = static_cast<double>(out);
    number(block, key, v);
    if (v != std::floor(v) || std::abs(v) > 9e15)
      issue(block, key, "expected an integer");
    else
      out = static_cast<Int>(v);
  }

  void boolean(const std::string& block, const std::string& key, bool& out) {
    if (const auto* e = scalar(block, key)) {
      if (e->values[0] == "true")
        out = true;
      else if (e->values[0] == "false")
        out = false;
      else
        issue(block, key, "expected true or false");
    }
  }

  void string(const std::string& block, const std::string& key, std::string& out) {
    if (const auto* e = scalar(block, key)) out = e->values[0];
  }

  void number_list(const std::string& block, const std::string& key, std::vector<double>& out) {
    if (const auto* e = find(block, key)) {
      out.clear();
      for (const auto& s : e->values) {
        if (auto v = parse_number(s))
          out.push_back(*v);
        else
          issue(block, key, "not a number: '" + s + "'");
      }
    }
  }

  template <class E>
  void choice(const std::string& block, const std::string& key, E& out,
              const std::vector<std::pair<std::string, E>>& options) {
    if (const auto* e = scalar(block, key)) {
      for (const auto& [name, value] : options)
        if (name == e->values[0]) {
          out = value;
          return;
        }
      std::string allowed;
      for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + o.first;
      issue(block, key, "unknown value '" + e->values[0] + "' (expected " + allowed + ")");
    }
  }

  void issue(const std::string& block, const std::string& key, const std::string& msg) {
    std::string where = block + "." + key;
    if (const auto b = doc_.blocks.find(block); b != doc_.blocks.end())
      if (const auto e = b->second.find(key); e != b->second.end())
        where = "line " + std::to_string(e->second.line) + ": " + where;
    issues_.push_back(where + ": " + msg);
  }

  void reject_unknown(const std::vector<std::string>& extra_blocks) {
    for (const auto& [name, block] : doc_.blocks) {
      const bool extra = std::find(extra_blocks.begin(), extra_blocks.end(), name) != extra_blocks.end();
      if (extra) continue;
      if (!used_.count(name)) {
        issues_.push_back(name + ": unknown block");
        continue;
      }
      for (const auto& [key, entry] : block)
        if (!used_[name].count(key))
          issues_.push_back("line " + std::to_string(entry.line) + ": " + name + "." + key + ": unknown key");
    }
  }

  void touch_block(const std::string& block) { used_[block]; }

  static std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  }

 private:
  const ConfigDocument& doc_;
  std::vector<std::string>& issues_;
  std::map<std::string, std::set<std::string>> used_;
};

const std::vector<std::string> kBlocks = {"mesh", "model", "solver", "initial_data", "diagnostics", "refinement", "output"};

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text) {
  const auto toks = tokenize(text);
  ConfigDocument doc;
  std::size_t i = 0;
  auto fail = [&](const Token& t, const std::string& msg) {
    throw ConfigError({"line " + std::to_string(t.line) + ": " + msg});
  };
  while (toks[i].kind != Token::End) {
    const Token& name = toks[i];
    if (name.kind != Token::Word) fail(name, "expected a block name, got '" + name.text + "'");
    if (toks[i + 1].kind != Token::LBrace) fail(toks[i + 1], "expected '{' after '" + name.text + "'");
    if (doc.blocks.count(name.text)) fail(name, "duplicate block '" + name.text + "'");
    i += 2;
    Block& block = doc.blocks[name.text];
    doc.block_order.push_back(name.text);
    while (toks[i].kind != Token::RBrace) {
      const Token& key = toks[i];
      if (key.kind != Token::Word) fail(key, "expected a key in block '" + name.text + "'");
      if (toks[i + 1].kind != Token::Equals) fail(toks[i + 1], "expected '=' after '" + key.text + "'");
      if (block.count(key.text)) fail(key, "duplicate key '" + name.text + "." + key.text + "'");
      i += 2;
      Entry entry;
      entry.line = key.line;
      while (true) {
        const Token& v = toks[i];
        const bool value = v.kind == Token::String ||
                           (v.kind == Token::Word && toks[i + 1].kind != Token::Equals);
        if (!value) fail(v, "missing value for '" + name.text + "." + key.text + "'");
        entry.values.push_back(v.text);
        ++i;
        if (toks[i].kind != Token::Comma) break;
        ++i;
      }
      block[key.text] = std::move(entry);
    }
    ++i;
  }
  return doc;
}

NonlinearityModel ModelConfig::build() const {
  if (family == "semilinear") return NonlinearityModel::semilinear(s0);
  if (family == "power_diffusion") return NonlinearityModel::power_diffusion(q, s0);
  if (family == "remark_family") return NonlinearityModel::remark_family(gamma1, gamma2, s0);
  throw ConfigError({"model.family: unknown family '" + family + "'"});
}

std::string format_double(double x) {
  // Shortest representation that parses back to the same double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot read file '" + path + "'"});
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::string physics_text(const SimulationConfig& c) {
  const auto d = format_double;
  std::ostringstream os;
  os << "mesh {\n  R = " << d(c.R) << "\n  N = " << c.N << "\n}\n";
  os << "model {\n  family = " << c.model.family << "\n  q = " << d(c.model.q) << "\n  gamma1 = "
     << d(c.model.gamma1) << "\n  gamma2 = " << d(c.model.gamma2) << "\n  s0 = " << d(c.model.s0) << "\n}\n";
  const auto& s = c.solver;
  os << "solver {\n  cfl_safety = " << d(s.cfl_safety) << "\n  dt_min = " << d(s.dt_min) << "\n  dt_max = "
     << d(s.dt_max) << "\n  u_blowup_threshold = " << d(s.u_blowup_threshold) << "\n  t_end = " << d(s.t_end)
     << "\n  v_scheme = " << to_string(s.v_scheme) << "\n  positivity_mode = " << to_string(s.positivity_mode)
     << "\n  chemotaxis_face = " << to_string(s.chemotaxis_face)
     << "\n  energy_guard = " << (s.energy_guard ? "true" : "false")
     << "\n  allow_degenerate = " << (s.allow_degenerate ? "true" : "false") << "\n  max_steps = " << s.max_steps
     << "\n}\n";
  const auto& i = c.initial_data;
  os << "initial_data {\n  kind = " << to_string(i.kind) << "\n  profile = " << to_string(i.spec.profile)
     << "\n  m = " << d(i.spec.m) << "\n  eta = " << d(i.spec.eta) << "\n  floor = " << d(i.spec.floor)
     << "\n  v_mode = " << to_string(i.spec.v_mode) << "\n  c = " << d(i.c);
  if (i.F_target) os << "\n  F_target = " << d(*i.F_target);
  os << "\n  F_offset = " << d(i.F_offset) << "\n  K_user = " << d(i.K_user);
  if (i.A_cap) os << "\n  A_cap = " << d(*i.A_cap);
  os << "\n}\n";
  os << "diagnostics {\n  every = " << c.diagnostics.every << "\n  dt = " << d(c.diagnostics.dt);
  if (!c.diagnostics.snapshots.empty()) {
    os << "\n  snapshots = ";
    for (std::size_t k = 0; k < c.diagnostics.snapshots.size(); ++k)
      os << (k ? ", " : "") << d(c.diagnostics.snapshots[k]);
  }
  os << "\n}\n";
  os << "refinement {\n  levels = " << c.refinement.levels << "\n  rel_tol = " << d(c.refinement.rel_tol) << "\n}\n";
  return os.str();
}

}  // namespace

std::string SimulationConfig::to_text() const {
  std::string t = physics_text(*this);
  if (!output_dir.empty()) t += "output {\n  dir = " + quote(output_dir) + "\n}\n";
  return t;
}

std::string SimulationConfig::hash() const { return fnv1a_hex(physics_text(*this)); }

nlohmann::json SimulationConfig::to_json() const {
  nlohmann::json j;
  j["mesh"] = {{"R", R}, {"N", N}};
  j["model"] = {{"family", model.family}, {"q", model.q}, {"gamma1", model.gamma1},
                {"gamma2", model.gamma2}, {"s0", model.s0}};
  j["solver"] = solver.to_json();
  nlohmann::json id = initial_data.spec.to_json();
  id["kind"] = to_string(initial_data.kind);
  id["c"] = initial_data.c;
  id["F_target"] = initial_data.F_target ? nlohmann::json(*initial_data.F_target) : nlohmann::json(nullptr);
  id["F_offset"] = initial_data.F_offset;
  id["K_user"] = initial_data.K_user;
  id["A_cap"] = initial_data.A_cap ? nlohmann::json(*initial_data.A_cap) : nlohmann::json(nullptr);
  j["initial_data"] = id;
  j["diagnostics"] = {{"every", diagnostics.every}, {"dt", diagnostics.dt}, {"snapshots", diagnostics.snapshots}};
  j["refinement"] = {{"levels", refinement.levels}, {"rel_tol", refinement.rel_tol}};
  j["output_dir"] = output_dir;
  j["hash"] = hash();
  return j;
}

void SimulationConfig::validate() const {
  std::vector<std::string> issues;
  if (!(R > 0.0)) issues.push_back("mesh.R: must be positive");
  if (N < 8) issues.push_back("mesh.N: must be at least 8");
  if (model.family != "semilinear" && model.family != "power_diffusion" && model.family != "remark_family")
    issues.push_back("model.family: unknown family '" + model.family + "'");
  if (!(model.s0 > 1.0)) issues.push_back("model.s0: must exceed 1");
  try {
    solver.validate();
  } catch (const ConfigError& e) {
    issues.insert(issues.end(), e.issues().begin(), e.issues().end());
  }
  const auto& i = initial_data;
  if (!(i.spec.m > 0.0)) issues.push_back("initial_data.m: must be positive");
  if (i.kind == DataKind::Concentrated && !(i.spec.eta > 0.0 && i.spec.eta < R))
    issues.push_back("initial_data.eta: must lie in (0, R)");
  if (i.kind == DataKind::Homogeneous && i.F_target)
    issues.push_back("initial_data.F_target: not allowed for homogeneous data");
  if (!(i.F_offset >= 0.0)) issues.push_back("initial_data.F_offset: must be >= 0");
  if (!(i.K_user > 0.0)) issues.push_back("initial_data.K_user: must be positive");
  if (i.A_cap && !(*i.A_cap > 0.0)) issues.push_back("initial_data.A_cap: must be positive");
  if (diagnostics.every < 0) issues.push_back("diagnostics.every: must be >= 0");
  if (!(diagnostics.dt >= 0.0)) issues.push_back("diagnostics.dt: must be >= 0");
  for (double t : diagnostics.snapshots)
    if (!(t >= 0.0 && t <= solver.t_end)) {
      issues.push_back("diagnostics.snapshots: time " + format_double(t) + " outside [0, t_end]");
      break;
    }
  if (refinement.levels < 1) issues.push_back("refinement.levels: must be >= 1");
  if (!(refinement.rel_tol > 0.0 && refinement.rel_tol < 1.0)) issues.push_back("refinement.rel_tol: must lie in (0, 1)");
  if (!issues.empty()) throw ConfigError(issues);
}

SimulationConfig simulation_config_from_document(const ConfigDocument& doc,
                                                 const std::vector<std::string>& extra_blocks, bool validate) {
  std::vector<std::string> issues;
  Reader rd(doc, issues);
  for (const auto& b : kBlocks) rd.touch_block(b);
  SimulationConfig c;
  rd.number("mesh", "R", c.R);
  rd.integer("mesh", "N", c.N);
  rd.string("model", "family", c.model.family);
  rd.number("model", "q", c.model.q);
  rd.number("model", "gamma1", c.model.gamma1);
  rd.number("model", "gamma2", c.model.gamma2);
  rd.number("model", "s0", c.model.s0);
  auto& s = c.solver;
  rd.number("solver", "cfl_safety", s.cfl_safety);
  rd.number("solver", "dt_min", s.dt_min);
  rd.number("solver", "dt_max", s.dt_max);
  rd.number("solver", "u_blowup_threshold", s.u_blowup_threshold);
  rd.number("solver", "t_end", s.t_end);
  rd.choice<VScheme>("solver", "v_scheme", s.v_scheme, {{"implicit", VScheme::Implicit}, {"explicit", VScheme::Explicit}});
  rd.choice<PositivityMode>("solver", "positivity_mode", s.positivity_mode,
                            {{"reject-and-halve", PositivityMode::RejectAndHalve}, {"clip-warn", PositivityMode::ClipWarn}});
  rd.choice<ChemotaxisFace>("solver", "chemotaxis_face", s.chemotaxis_face,
                            {{"hybrid", ChemotaxisFace::Hybrid}, {"upwind", ChemotaxisFace::Upwind}});
  rd.boolean("solver", "energy_guard", s.energy_guard);
  rd.boolean("solver", "allow_degenerate", s.allow_degenerate);
  rd.integer("solver", "max_steps", s.max_steps);
  auto& i = c.initial_data;
  rd.choice<DataKind>("initial_data", "kind", i.kind,
                      {{"concentrated", DataKind::Concentrated}, {"homogeneous", DataKind::Homogeneous}});
  rd.choice<Profile>("initial_data", "profile", i.spec.profile,
                     {{"rational4", Profile::Rational4}, {"gaussian", Profile::Gaussian}});
  rd.number("initial_data", "m", i.spec.m);
  rd.number("initial_data", "eta", i.spec.eta);
  rd.number("initial_data", "floor", i.spec.floor);
  rd.choice<VMode>("initial_data", "v_mode", i.spec.v_mode, {{"elliptic", VMode::Elliptic}, {"copy", VMode::Copy}});
  rd.number("initial_data", "c", i.c);
  rd.optional_number("initial_data", "F_target", i.F_target);
  rd.number("initial_data", "F_offset", i.F_offset);
  rd.number("initial_data", "K_user", i.K_user);
  rd.optional_number("initial_data", "A_cap", i.A_cap);
  rd.integer("diagnostics", "every", c.diagnostics.every);
  rd.number("diagnostics", "dt", c.diagnostics.dt);
  rd.number_list("diagnostics", "snapshots", c.diagnostics.snapshots);
  rd.integer("refinement", "levels", c.refinement.levels);
  rd.number("refinement", "rel_tol", c.refinement.rel_tol);
  rd.string("output", "dir", c.output_dir);
  rd.reject_unknown(extra_blocks);
  if (!issues.empty()) throw ConfigError(issues);
  if (validate) c.validate();
  return c;
}

SimulationConfig simulation_config_from_text(const std::string& text) {
  return simulation_config_from_document(ConfigDocument::parse(text));
}

std::size_t SweepSpec::cell_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.second.size();
  return n;
}

std::vector<double> SweepSpec::cell_values(std::size_t k) const {
  std::vector<double> v(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    const auto n = axes[a].second.size();
    v[a] = axes[a].second[k % n];
    k /= n;
  }
  return v;
}

SimulationConfig SweepSpec::cell_config(std::size_t k) const {
  SimulationConfig c = base;
  const auto v = cell_values(k);
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const auto& name = axes[a].first;
    if (name == "q") c.model.q = v[a];
    if (name == "gamma1") c.model.gamma1 = v[a];
    if (name == "gamma2") c.model.gamma2 = v[a];
    if (name == "m") c.initial_data.spec.m = v[a];
    if (name == "eta") {
      c.initial_data.spec.eta = v[a];
      c.initial_data.F_target.reset();
    }
  }
  return c;
}

std::string SweepSpec::to_text() const {
  std::ostringstream os;
  os << base.to_text() << "sweep {\n";
  for (const auto& [name, values] : axes) {
    os << "  " << name << " = ";
    for (std::size_t k = 0; k < values.size(); ++k) os << (k ? ", " : "") << format_double(values[k]);
    os << "\n";
  }
  os << "  jobs = " << jobs << "\n}\n";
  return os.str();
}

std::string SweepSpec::hash() const {
  SweepSpec copy = *this;
  copy.base.output_dir.clear();
  copy.jobs = 1;
  return fnv1a_hex(copy.to_text());
}

SweepSpec sweep_spec_from_text(const std::string& text) {
  const auto doc = ConfigDocument::parse(text);
  SweepSpec sp;
  std::vector<std::string> issues;
  const auto block = doc.blocks.find("sweep");
  if (block == doc.blocks.end()) throw ConfigError({"sweep: missing sweep block"});
  for (const auto& [key, entry] : block->second) {
    const auto& names = SweepSpec::kAxisNames;
    const bool axis = std::find(std::begin(names), std::end(names), key) != std::end(names);
    if (!axis && key != "jobs") issues.push_back("sweep." + key + ": unknown axis");
  }
  if (const auto j = block->second.find("jobs"); j != block->second.end()) {
    const auto v = j->second.values.size() == 1 ? Reader::parse_number(j->second.values[0]) : std::nullopt;
    if (!v || *v < 1 || *v != std::floor(*v))
      issues.push_back("sweep.jobs: expected a positive integer");
    else
      sp.jobs = static_cast<int>(*v);
  }
  for (const char* name : SweepSpec::kAxisNames) {
    const auto e = block->second.find(name);
    if (e == block->second.end()) continue;
    std::vector<double> values;
    for (const auto& s : e->second.values) {
      if (auto v = Reader::parse_number(s))
        values.push_back(*v);
      else
        issues.push_back(std::string("sweep.") + name + ": not a number: '" + s + "'");
    }
    sp.axes.emplace_back(name, values);
  }
  if (sp.axes.empty()) issues.push_back("sweep: at least one axis is required");
  if (!issues.empty()) throw ConfigError(issues);
  sp.base = simulation_config_from_document(doc, {"sweep"}, false);
  for (std::size_t k = 0; k < sp.cell_count(); ++k) {
    try {
      sp.cell_config(k).validate();
    } catch (const ConfigError& e) {
      for (const auto& i : e.issues()) issues.push_back("sweep cell " + std::to_string(k) + ": " + i);
    }
  }
  if (!issues.empty()) throw ConfigError(issues);
  return sp;
}

}  // namespace ksblow
