#include "tgan/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tgan {

const char* model_name(ModelKind m) { return m == ModelKind::triplet ? "triplet" : "vanilla"; }
const char* data_name(DataKind d) { return d == DataKind::ring ? "ring" : "mnist"; }
const char* precision_name(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }

// ---- presets -----------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"ring-triplet", "ring-vanilla", "ring-triplet-fast", "ring-vanilla-fast",
          "mnist-triplet", "mnist-vanilla", "mnist-triplet-fast", "mnist-vanilla-fast"};
}

TrainConfig preset(const std::string& name) {
  TrainConfig c;
  std::string rest = name;
  const bool fast = rest.ends_with("-fast");
  if (fast) rest.resize(rest.size() - 5);
  if (rest == "ring-triplet" || rest == "ring-vanilla") {
    c.data = DataKind::ring;
    c.model = rest == "ring-triplet" ? ModelKind::triplet : ModelKind::vanilla;
    c.batch_size = 512;
    c.steps = 25000;
    c.lr_g = 1e-3;
    c.lr_c = 2e-4;
    c.c = 0.5;
    c.eval_every = 5000;
    c.precision = Precision::f64;
    if (fast) {
      c.batch_size = 256;
      c.steps = 8000;
      c.eval_every = 1000;
    }
  } else if (rest == "mnist-triplet" || rest == "mnist-vanilla") {
    c.data = DataKind::mnist;
    c.model = rest == "mnist-triplet" ? ModelKind::triplet : ModelKind::vanilla;
    c.batch_size = 256;
    c.steps = 100000;
    c.lr_g = 5e-4;
    c.lr_c = 5e-4;
    c.c = 1.0;
    c.eval_every = 10000;
    c.precision = Precision::f32;
    if (fast) {
      c.steps = 20000;
      c.eval_every = 5000;
    }
  } else {
    throw ConfigError("unknown preset '" + name + "'", 0);
  }
  c.beta1 = 0.5;
  c.beta2 = 0.999;
  c.feature_dim = 16;
  c.metric = Metric::arc;
  return c;
}

// ---- text format -------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<Entry> tokenize(const std::string& text, const std::set<std::string>& sections) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw ConfigError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    if (section.empty()) throw ConfigError("key outside of any section", line_no);
    out.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
  }
  return out;
}

template <typename T>
T parse_number(const Entry& e, const char* kind) {
  T v{};
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto res = std::from_chars(first, last, v);
  if (e.value.empty() || res.ec != std::errc() || res.ptr != last) {
    throw ConfigError("key '" + e.key + "' expects " + kind + ", got '" + e.value + "'", e.line);
  }
  return v;
}

using Setter = std::function<void(TrainConfig&, const Entry&)>;

struct KeySpec {
  std::string section;
  Setter set;
};

Setter int_key(int TrainConfig::*field) {
  return [field](TrainConfig& c, const Entry& e) { c.*field = parse_number<int>(e, "an integer"); };
}
Setter real_key(double TrainConfig::*field) {
  return [field](TrainConfig& c, const Entry& e) { c.*field = parse_number<double>(e, "a real number"); };
}
Setter string_key(std::string TrainConfig::*field) {
  return [field](TrainConfig& c, const Entry& e) { c.*field = e.value; };
}

template <typename E>
Setter enum_key(E TrainConfig::*field, std::vector<std::pair<std::string, E>> choices) {
  return [field, choices](TrainConfig& c, const Entry& e) {
    std::string names;
    for (const auto& [name, value] : choices) {
      if (e.value == name) {
        c.*field = value;
        return;
      }
      names += (names.empty() ? "" : " | ") + name;
    }
    throw ConfigError("key '" + e.key + "' expects one of " + names + ", got '" + e.value + "'", e.line);
  };
}

const std::map<std::string, KeySpec>& key_table() {
  static const std::map<std::string, KeySpec> table = {
      {"batch_size", {"train", int_key(&TrainConfig::batch_size)}},
      {"steps", {"train", int_key(&TrainConfig::steps)}},
      {"lr_g", {"train", real_key(&TrainConfig::lr_g)}},
      {"lr_c", {"train", real_key(&TrainConfig::lr_c)}},
      {"beta1", {"train", real_key(&TrainConfig::beta1)}},
      {"beta2", {"train", real_key(&TrainConfig::beta2)}},
      {"eps_adam", {"train", real_key(&TrainConfig::eps_adam)}},
      {"seed", {"train",
                [](TrainConfig& c, const Entry& e) { c.seed = parse_number<std::uint64_t>(e, "an unsigned integer"); }}},
      {"eval_every", {"train", int_key(&TrainConfig::eval_every)}},
      {"precision", {"train", enum_key(&TrainConfig::precision, {{"f64", Precision::f64}, {"f32", Precision::f32}})}},
      {"wall_clock", {"train", enum_key(&TrainConfig::wall_clock, {{"false", false}, {"true", true}})}},
      {"out_dir", {"train", string_key(&TrainConfig::out_dir)}},
      {"model", {"model", enum_key(&TrainConfig::model, {{"triplet", ModelKind::triplet}, {"vanilla", ModelKind::vanilla}})}},
      {"c", {"model", real_key(&TrainConfig::c)}},
      {"feature_dim", {"model", int_key(&TrainConfig::feature_dim)}},
      {"metric", {"model", enum_key(&TrainConfig::metric, {{"arc", Metric::arc}, {"chord", Metric::chord}})}},
      {"latent_dim", {"model", int_key(&TrainConfig::latent_dim)}},
      {"data", {"data", enum_key(&TrainConfig::data, {{"ring", DataKind::ring}, {"mnist", DataKind::mnist}})}},
      {"n_modes", {"data", [](TrainConfig& c, const Entry& e) { c.ring.n_modes = parse_number<int>(e, "an integer"); }}},
      {"radius", {"data", [](TrainConfig& c, const Entry& e) { c.ring.radius = parse_number<double>(e, "a real number"); }}},
      {"sigma", {"data", [](TrainConfig& c, const Entry& e) { c.ring.sigma = parse_number<double>(e, "a real number"); }}},
      {"mnist_dir", {"data", string_key(&TrainConfig::mnist_dir)}},
  };
  return table;
}

TrainConfig apply_entries(const std::vector<Entry>& entries, const std::optional<TrainConfig>& base) {
  TrainConfig c = base.value_or(TrainConfig{});
  std::map<std::string, std::size_t> seen;
  for (const auto& e : entries) {
    const auto it = key_table().find(e.key);
    if (it == key_table().end() || it->second.section != e.section) {
      throw ConfigError("unknown key '" + e.key + "' in [" + e.section + "]", e.line);
    }
    if (const auto prev = seen.find(e.key); prev != seen.end()) {
      throw ConfigError("key '" + e.key + "' already set on line " + std::to_string(prev->second), e.line);
    }
    seen[e.key] = e.line;
    it->second.set(c, e);
  }
  if (!base) {
    for (const char* required : {"model", "data"}) {
      if (!seen.count(required)) {
        const std::size_t last = entries.empty() ? 0 : entries.back().line;
        throw ConfigError(std::string("missing required key '") + required + "' (no preset given)", last);
      }
    }
  }
  c.validate();
  return c;
}

}  // namespace

TrainConfig parse_config_text(const std::string& text, const std::optional<TrainConfig>& base) {
  return apply_entries(tokenize(text, {"train", "model", "data"}), base);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainConfig parse_config(const std::filesystem::path& path, const std::optional<TrainConfig>& base) {
  const std::string text = read_text_file(path);
  try {
    return parse_config_text(text, base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.line());
  }
}

std::string serialize_config(const TrainConfig& c) {
  std::ostringstream o;
  o << "[train]\n"
    << "batch_size = " << c.batch_size << '\n'
    << "steps = " << c.steps << '\n'
    << "lr_g = " << format_double(c.lr_g) << '\n'
    << "lr_c = " << format_double(c.lr_c) << '\n'
    << "beta1 = " << format_double(c.beta1) << '\n'
    << "beta2 = " << format_double(c.beta2) << '\n'
    << "eps_adam = " << format_double(c.eps_adam) << '\n'
    << "seed = " << c.seed << '\n'
    << "eval_every = " << c.eval_every << '\n'
    << "precision = " << precision_name(c.precision) << '\n'
    << "wall_clock = " << (c.wall_clock ? "true" : "false") << '\n'
    << "out_dir = " << c.out_dir << '\n'
    << "\n[model]\n"
    << "model = " << model_name(c.model) << '\n'
    << "c = " << format_double(c.c) << '\n'
    << "feature_dim = " << c.feature_dim << '\n'
    << "metric = " << metric_name(c.metric) << '\n'
    << "latent_dim = " << c.latent_dim << '\n'
    << "\n[data]\n"
    << "data = " << data_name(c.data) << '\n'
    << "n_modes = " << c.ring.n_modes << '\n'
    << "radius = " << format_double(c.ring.radius) << '\n'
    << "sigma = " << format_double(c.ring.sigma) << '\n'
    << "mnist_dir = " << c.mnist_dir << '\n';
  return o.str();
}

std::string config_hash(const TrainConfig& config) {
  const std::string body = serialize_config(config);
  const std::string blob = "blob " + std::to_string(body.size()) + '\0' + body;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

// ---- manifest ----------------------------------------------------------------

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest make_manifest(const TrainConfig& config) {
  RunManifest m;
  m.config = config;
  m.hash = config_hash(config);
  m.started = utc_timestamp();
  m.status = "running";
  return m;
}

std::string serialize_manifest(const RunManifest& m) {
  std::ostringstream o;
  o << "[run]\n"
    << "hash = " << m.hash << '\n'
    << "seed = " << m.config.seed << '\n'
    << "started = " << m.started << '\n'
    << "finished = " << m.finished << '\n'
    << "status = " << m.status << '\n'
    << "outputs =";
  for (const auto& f : m.outputs) o << ' ' << f;
  o << "\n\n" << serialize_config(m.config);
  return o.str();
}

RunManifest parse_manifest_text(const std::string& text) {
  const auto entries = tokenize(text, {"run", "train", "model", "data"});
  RunManifest m;
  std::vector<Entry> config_entries;
  for (const auto& e : entries) {
    if (e.section != "run") {
      config_entries.push_back(e);
      continue;
    }
    if (e.key == "hash") m.hash = e.value;
    else if (e.key == "seed") parse_number<std::uint64_t>(e, "an unsigned integer");
    else if (e.key == "started") m.started = e.value;
    else if (e.key == "finished") m.finished = e.value;
    else if (e.key == "status") m.status = e.value;
    else if (e.key == "outputs") {
      std::istringstream ls(e.value);
      for (std::string f; ls >> f;) m.outputs.push_back(f);
    } else {
      throw ConfigError("unknown key '" + e.key + "' in [run]", e.line);
    }
  }
  m.config = apply_entries(config_entries, std::nullopt);
  if (m.hash != config_hash(m.config)) {
    throw ConfigError("manifest hash " + m.hash + " does not match its config snapshot", 0);
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << serialize_manifest(manifest);
  if (!out) throw FormatError("write failed: " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest_text(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace tgan
