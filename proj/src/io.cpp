#include "aircomp/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace aircomp {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'C', 'C', 'S'};
constexpr std::uint32_t kVersion = 1;

const std::set<std::string> kConfigFields = {"num_devices",     "num_subcarriers", "num_rx_antennas", "noise_power",
                                             "power_budgets",   "error_variances", "mse_threshold"};

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ConfigError(std::string(name) + " is missing");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(name) + " has the wrong type");
  }
}

json flatten(const std::vector<Eigen::MatrixXcd>& g) {
  json a = json::array();
  const int M = static_cast<int>(g.size());
  const int K = M ? static_cast<int>(g[0].cols()) : 0, N = M ? static_cast<int>(g[0].rows()) : 0;
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) {
        a.push_back(g[m](n, k).real());
        a.push_back(g[m](n, k).imag());
      }
  return a;
}

std::vector<Eigen::MatrixXcd> unflatten(const std::vector<double>& v, int K, int M, int N) {
  if (v.size() != static_cast<std::size_t>(2) * K * M * N)
    throw ConfigError("channel gain array has the wrong length");
  std::vector<Eigen::MatrixXcd> g(M, Eigen::MatrixXcd(N, K));
  std::size_t i = 0;
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n, i += 2) g[m](n, k) = cplx(v[i], v[i + 1]);
  return g;
}

std::vector<double> raw(const std::vector<Eigen::MatrixXcd>& g, int K, int M, int N) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(2) * K * M * N);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) {
        v.push_back(g[m](n, k).real());
        v.push_back(g[m](n, k).imag());
      }
  return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

json config_to_json(const SystemConfig& cfg) {
  return json{{"num_devices", cfg.num_devices},     {"num_subcarriers", cfg.num_subcarriers},
              {"num_rx_antennas", cfg.num_rx_antennas}, {"noise_power", cfg.noise_power},
              {"power_budgets", cfg.power_budgets}, {"error_variances", cfg.error_variances},
              {"mse_threshold", cfg.mse_threshold}};
}

SystemConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kConfigFields.count(key)) throw ConfigError("unknown config field " + key);
  SystemConfig c;
  c.num_devices = field<int>(j, "num_devices");
  c.num_subcarriers = field<int>(j, "num_subcarriers");
  c.num_rx_antennas = field<int>(j, "num_rx_antennas");
  c.noise_power = field<double>(j, "noise_power");
  c.power_budgets = field<std::vector<double>>(j, "power_budgets");
  c.error_variances = field<std::vector<double>>(j, "error_variances");
  c.mse_threshold = field<double>(j, "mse_threshold");
  validate_config(c);
  return c;
}

json channel_to_json(const ChannelState& ch) {
  json j{{"num_devices", ch.num_devices()},
         {"num_subcarriers", ch.num_subcarriers()},
         {"num_rx_antennas", ch.num_rx_antennas()},
         {"error_variances", ch.error_variances},
         {"estimated", flatten(ch.estimated)}};
  if (ch.true_gains) j["true_gains"] = flatten(*ch.true_gains);
  return j;
}

ChannelState channel_from_json(const json& j) {
  const int K = field<int>(j, "num_devices"), M = field<int>(j, "num_subcarriers"), N = field<int>(j, "num_rx_antennas");
  if (K < 1 || M < 1 || N < 1) throw ConfigError("channel dimensions must be positive");
  ChannelState ch;
  ch.error_variances = field<std::vector<double>>(j, "error_variances");
  if (static_cast<int>(ch.error_variances.size()) != K) throw ConfigError("error_variances must have K entries");
  ch.estimated = unflatten(field<std::vector<double>>(j, "estimated"), K, M, N);
  if (j.contains("true_gains")) ch.true_gains = unflatten(field<std::vector<double>>(j, "true_gains"), K, M, N);
  return ch;
}

void write_channel_binary(const ChannelState& ch, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::uint32_t K = ch.num_devices(), M = ch.num_subcarriers(), N = ch.num_rx_antennas();
  const std::uint32_t flag = ch.true_gains ? 1 : 0;
  f.write(kMagic, 4);
  for (std::uint32_t v : {kVersion, K, M, N, flag}) f.write(reinterpret_cast<const char*>(&v), sizeof v);
  auto put = [&](const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  put(ch.error_variances);
  put(raw(ch.estimated, K, M, N));
  if (ch.true_gains) put(raw(*ch.true_gains, K, M, N));
  if (!f) throw IoError("failed writing " + path);
}

ChannelState read_channel_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[4];
  std::uint32_t hdr[5];
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path + " is not a channel file");
  if (hdr[0] != kVersion) throw IoError(path + " has an unsupported version");
  const int K = static_cast<int>(hdr[1]), M = static_cast<int>(hdr[2]), N = static_cast<int>(hdr[3]);
  if (K < 1 || M < 1 || N < 1) throw IoError(path + " has invalid dimensions");
  auto get = [&](std::size_t n) {
    std::vector<double> v(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw IoError(path + " is truncated");
    return v;
  };
  ChannelState ch;
  ch.error_variances = get(K);
  const std::size_t n = static_cast<std::size_t>(2) * K * M * N;
  ch.estimated = unflatten(get(n), K, M, N);
  if (hdr[4] == 1) ch.true_gains = unflatten(get(n), K, M, N);
  return ch;
}

void save_channel(const ChannelState& ch, const std::string& path) {
  if (ends_with(path, ".json"))
    write_text_file(path, channel_to_json(ch).dump() + "\n");
  else
    write_channel_binary(ch, path);
}

ChannelState load_channel(const std::string& path) {
  return ends_with(path, ".json") ? channel_from_json(read_json_file(path)) : read_channel_binary(path);
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace aircomp
