#pragma once

#include "aircomp/model.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace aircomp {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json config_to_json(const SystemConfig& cfg);
// Requires exactly the SystemConfig field names; validates the result.
SystemConfig config_from_json(const nlohmann::json& j);

// Gains are flattened device-major, then subcarrier, then antenna, each
// complex entry as an interleaved (re, im) pair.
nlohmann::json channel_to_json(const ChannelState& ch);
ChannelState channel_from_json(const nlohmann::json& j);

// Binary layout (host byte order): "ACCS", uint32 version = 1, uint32 K, M,
// N_r, uint32 flag (1 when true gains follow), K doubles of error variances,
// 2*K*M*N_r doubles of estimates, then the true gains when flagged.
void write_channel_binary(const ChannelState& ch, const std::string& path);
ChannelState read_channel_binary(const std::string& path);

// Picks JSON for a ".json" suffix and the binary layout otherwise.
void save_channel(const ChannelState& ch, const std::string& path);
ChannelState load_channel(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace aircomp
