#include "hsl/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hsl {

// ---------------------------------------------------------------- SHA-256

namespace {

constexpr uint32_t kSha256K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

inline uint32_t rotr(uint32_t x, int s) { return (x >> s) | (x << (32 - s)); }

struct Sha256 {
  uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                   0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  unsigned char block[64];
  std::size_t block_len = 0;
  uint64_t total_len = 0;

  void process(const unsigned char* p) {
    uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
             (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      const uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
    uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
    for (int i = 0; i < 64; ++i) {
      const uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const uint32_t ch = (e & f) ^ (~e & g);
      const uint32_t t1 = hh + S1 + ch + kSha256K[i] + w[i];
      const uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const uint32_t t2 = S0 + maj;
      hh = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    h[0] += a; h[1] += b; h[2] += c; h[3] += d;
    h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
  }

  void update(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    total_len += len;
    while (len > 0) {
      const std::size_t take = std::min(len, std::size_t(64) - block_len);
      std::memcpy(block + block_len, p, take);
      block_len += take;
      p += take;
      len -= take;
      if (block_len == 64) {
        process(block);
        block_len = 0;
      }
    }
  }

  std::string finish() {
    const uint64_t bits = total_len * 8;
    const unsigned char one = 0x80;
    update(&one, 1);
    const unsigned char zero = 0;
    while (block_len != 56) update(&zero, 1);
    unsigned char lenb[8];
    for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(lenb, 8);
    char out[65];
    for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
    return std::string(out, 64);
  }
};

}  // namespace

std::string sha256_hex(const void* data, std::size_t len) {
  Sha256 s;
  s.update(data, len);
  return s.finish();
}

std::string sha256_hex(const std::string& data) {
  return sha256_hex(data.data(), data.size());
}

std::string sha256_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256_file_hex: cannot open " + path);
  Sha256 s;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    s.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return s.finish();
}

// ------------------------------------------------------------------- CSV

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\r\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return nlohmann::json(v).dump();
}

// ---------------------------------------------------------------- config

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& origin, const std::string& key,
                            const std::string& why) {
  throw std::runtime_error("config error (" + origin + "), field '" + key +
                           "': " + why);
}

template <typename T>
T expect(const json& j, const std::string& origin, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    bad_field(origin, key, e.what());
  }
}

void apply_phi(ExperimentConfig& cfg, const json& j, const std::string& origin) {
  if (!j.is_object()) bad_field(origin, "phi", "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "kind")
      cfg.phi_kind = expect<std::string>(it.value(), origin, "phi.kind");
    else if (k == "t")
      cfg.phi_t = expect<double>(it.value(), origin, "phi.t");
    else if (k == "hermite")
      cfg.phi_hermite = expect<int>(it.value(), origin, "phi.hermite");
    else if (k == "poly")
      cfg.phi_poly = expect<std::vector<double>>(it.value(), origin, "phi.poly");
    else if (k == "Q")
      cfg.phi_q = expect<int>(it.value(), origin, "phi.Q");
    else
      bad_field(origin, "phi." + k, "unknown key");
  }
}

}  // namespace

void apply_config_json(ExperimentConfig& cfg, const std::string& text,
                       const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config parse error (" + origin + ") at byte " +
                             std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object())
    throw std::runtime_error("config error (" + origin + "): top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "d")
      cfg.d = expect<int>(v, origin, k);
    else if (k == "ell_list")
      cfg.ell_list = expect<std::vector<int>>(v, origin, k);
    else if (k == "phi")
      apply_phi(cfg, v, origin);
    else if (k == "backend") {
      cfg.backend = expect<std::string>(v, origin, k);
      if (cfg.backend != "auto" && cfg.backend != "synthesis" &&
          cfg.backend != "cholesky")
        bad_field(origin, k, "expected auto | synthesis | cholesky");
    }
    else if (k == "oversample")
      cfg.oversample = expect<int>(v, origin, k);
    else if (k == "reps")
      cfg.reps = expect<int>(v, origin, k);
    else if (k == "mc_samples")
      cfg.mc_samples = expect<long long>(v, origin, k);
    else if (k == "seed")
      cfg.seed = expect<std::uint64_t>(v, origin, k);
    else if (k == "threads")
      cfg.threads = expect<int>(v, origin, k);
    else if (k == "out_dir")
      cfg.out_dir = expect<std::string>(v, origin, k);
    else if (k == "bandwidth")
      cfg.bandwidth = expect<double>(v, origin, k);
    else if (k == "tolerances") {
      if (!v.is_object()) bad_field(origin, k, "expected an object");
      for (auto t = v.begin(); t != v.end(); ++t)
        cfg.tolerances[t.key()] = expect<double>(t.value(), origin, k + "." + t.key());
    } else {
      bad_field(origin, k, "unknown key");
    }
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config error: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_json(cfg, ss.str(), path);
}

void apply_env(ExperimentConfig& cfg) {
  auto get = [](const char* name) -> const char* { return std::getenv(name); };
  try {
    if (const char* v = get("HSL_D")) cfg.d = std::stoi(v);
    if (const char* v = get("HSL_ELL")) cfg.ell_list = parse_int_list(v);
    if (const char* v = get("HSL_PHI_KIND")) cfg.phi_kind = v;
    if (const char* v = get("HSL_PHI_T")) cfg.phi_t = std::stod(v);
    if (const char* v = get("HSL_PHI_HERMITE")) cfg.phi_hermite = std::stoi(v);
    if (const char* v = get("HSL_PHI_POLY")) cfg.phi_poly = parse_double_list(v);
    if (const char* v = get("HSL_PHI_Q")) cfg.phi_q = std::stoi(v);
    if (const char* v = get("HSL_BACKEND")) cfg.backend = v;
    if (const char* v = get("HSL_OVERSAMPLE")) cfg.oversample = std::stoi(v);
    if (const char* v = get("HSL_REPS")) cfg.reps = std::stoi(v);
    if (const char* v = get("HSL_MC_SAMPLES")) cfg.mc_samples = std::stoll(v);
    if (const char* v = get("HSL_SEED")) cfg.seed = std::stoull(v);
    if (const char* v = get("HSL_THREADS")) cfg.threads = std::stoi(v);
    if (const char* v = get("HSL_OUT")) cfg.out_dir = v;
    if (const char* v = get("HSL_BANDWIDTH")) cfg.bandwidth = std::stod(v);
  } catch (const std::logic_error& e) {
    throw std::runtime_error(std::string("config error (environment): ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["d"] = cfg.d;
  j["ell_list"] = cfg.ell_list;
  j["phi"] = {{"kind", cfg.phi_kind},
              {"t", cfg.phi_t},
              {"hermite", cfg.phi_hermite},
              {"poly", cfg.phi_poly},
              {"Q", cfg.phi_q}};
  j["backend"] = cfg.backend;
  j["oversample"] = cfg.oversample;
  j["reps"] = cfg.reps;
  j["mc_samples"] = cfg.mc_samples;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["out_dir"] = cfg.out_dir;
  j["bandwidth"] = cfg.bandwidth;
  j["tolerances"] = cfg.tolerances;
  return j.dump();  // object keys serialize sorted: canonical
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Hash only fields that determine results: thread count and output
  // directory change where/how work runs, never what is computed.
  json j = json::parse(config_to_json(cfg));
  j.erase("threads");
  j.erase("out_dir");
  return sha256_hex(j.dump());
}

ChaosSpec make_chaos(const ExperimentConfig& cfg) {
  if (cfg.phi_kind == "exponential") return chaos_exponential(cfg.phi_t, cfg.phi_q);
  if (cfg.phi_kind == "hermite") return chaos_hermite(cfg.phi_hermite);
  if (cfg.phi_kind == "polynomial") return chaos_polynomial(cfg.phi_poly);
  throw std::runtime_error("config error: unknown phi.kind '" + cfg.phi_kind +
                           "' (expected exponential | hermite | polynomial)");
}

BackendChoice backend_choice(const ExperimentConfig& cfg) {
  if (cfg.backend == "auto") return BackendChoice::Auto;
  if (cfg.backend == "synthesis") return BackendChoice::Synthesis;
  if (cfg.backend == "cholesky") return BackendChoice::Cholesky;
  throw std::runtime_error("config error: unknown backend '" + cfg.backend +
                           "' (expected auto | synthesis | cholesky)");
}

namespace {

template <typename T, typename Conv>
std::vector<T> parse_list(const std::string& text, Conv conv, const char* what) {
  std::vector<T> out;
  std::string tok;
  std::stringstream ss(text);
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    try {
      out.push_back(conv(tok, &pos));
    } catch (const std::logic_error&) {
      throw std::runtime_error(std::string("cannot parse ") + what + " list element '" +
                               tok + "'");
    }
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    if (pos != tok.size())
      throw std::runtime_error(std::string("cannot parse ") + what + " list element '" +
                               tok + "'");
  }
  if (out.empty())
    throw std::runtime_error(std::string("empty ") + what + " list");
  return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  return parse_list<int>(
      text, [](const std::string& s, std::size_t* p) { return std::stoi(s, p); }, "integer");
}

std::vector<double> parse_double_list(const std::string& text) {
  return parse_list<double>(
      text, [](const std::string& s, std::size_t* p) { return std::stod(s, p); }, "real");
}

std::string record_to_json(const ResultRecord& r) {
  json j;
  j["experiment_id"] = r.experiment_id;
  j["timestamp"] = r.timestamp;
  j["config_hash"] = r.config_hash;
  j["payload_path"] = r.payload_path;
  j["payload_sha256"] = r.payload_sha256;
  return j.dump();
}

}  // namespace hsl
