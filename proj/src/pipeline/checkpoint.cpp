#include "adrf/pipeline/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace adrf::pipeline {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'R', 'F'};

template <class T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get(const std::string& what) {
    need(sizeof(T), what);
    unsigned char b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }

  std::string get_string(const std::string& what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const std::string& what) const {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedCheckpoint("checkpoint truncated in " + what + " (offset " + std::to_string(pos_) + ", needs " +
                                std::to_string(n) + " more bytes, " + std::to_string(bytes_.size() - pos_) + " left)");
    }
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::size_t> split_sizes(const std::string& s, const std::string& key) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw CheckpointError("checkpoint config '" + key + "': not a list of sizes: " + s);
    }
  }
  return out;
}

std::size_t config_size(const Checkpoint& c, const std::string& key) {
  const auto it = c.config.find(key);
  if (it == c.config.end()) throw CheckpointError("checkpoint config lacks '" + key + "'");
  const auto v = split_sizes(it->second, key);
  if (v.size() != 1) throw CheckpointError("checkpoint config '" + key + "': expected one size");
  return v[0];
}

Checkpoint from_registry(ModelKind kind, const nn::ParameterRegistry& reg, std::map<std::string, std::string> config,
                         const std::map<std::string, std::string>& extra,
                         const std::optional<data::ScalerParams>& scaler) {
  Checkpoint c;
  c.kind = kind;
  for (const auto& [k, v] : extra) config[k] = v;
  c.config = std::move(config);
  c.scaler = scaler;
  for (const auto& e : reg.entries()) {
    const auto d = e.tensor.data();
    c.tensors.push_back({e.name, e.tensor.shape(), {d.begin(), d.end()}});
  }
  return c;
}

void fill(const Checkpoint& c, const nn::ParameterRegistry& reg) {
  if (c.tensors.size() != reg.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(c.tensors.size()) + " tensors, the " +
                          std::string(kind_name(c.kind)) + " model has " + std::to_string(reg.size()));
  }
  for (const auto& st : c.tensors) {
    if (!reg.contains(st.name)) throw CheckpointError("checkpoint tensor '" + st.name + "' is not a model parameter");
    Tensor t = reg.at(st.name);
    if (t.shape() != st.shape) {
      throw CheckpointError("checkpoint tensor '" + st.name + "' has shape " + shape_string(st.shape) +
                            ", the model expects " + shape_string(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(st.values.begin(), st.values.end(), dst.begin());
  }
}

}  // namespace

std::string_view kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::imu_autoencoder: return "imu-autoencoder";
    case ModelKind::imu_forecaster: return "imu-forecaster";
    case ModelKind::vision_forecaster: return "vision-forecaster";
  }
  return "unknown";
}

std::string encode_checkpoint(const Checkpoint& c) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.config.size()));
  for (const auto& [k, v] : c.config) {
    put_string(out, k);
    put_string(out, v);
  }
  put<std::uint8_t>(out, c.scaler ? 1 : 0);
  if (c.scaler) {
    for (double v : c.scaler->min) put<double>(out, v);
    for (double v : c.scaler->max) put<double>(out, v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    if (shape_numel(t.shape) != t.values.size()) {
      throw ContractViolation("checkpoint tensor '" + t.name + "': value count does not match its shape");
    }
    put_string(out, t.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) put<std::uint64_t>(out, d);
    for (double v : t.values) put<double>(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagic("not a checkpoint: magic bytes are not \"ADRF\"");
  }
  Reader r(bytes);
  r.get<std::uint32_t>("magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint format version " + std::to_string(version) + ", this build reads version " +
                          std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  const auto kind = r.get<std::uint32_t>("model kind");
  if (kind < 1 || kind > 3) throw CheckpointError("unknown model kind tag " + std::to_string(kind));
  c.kind = static_cast<ModelKind>(kind);
  const auto n_config = r.get<std::uint32_t>("config count");
  for (std::uint32_t i = 0; i < n_config; ++i) {
    auto k = r.get_string("config key");
    c.config[k] = r.get_string("config value '" + k + "'");
  }
  if (r.get<std::uint8_t>("scaler flag")) {
    data::ScalerParams s;
    for (double& v : s.min) v = r.get<double>("scaler");
    for (double& v : s.max) v = r.get<double>("scaler");
    c.scaler = s;
  }
  const auto n_tensors = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    StoredTensor t;
    t.name = r.get_string("tensor name");
    const std::string where = "tensor '" + t.name + "'";
    const auto rank = r.get<std::uint32_t>(where);
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(r.get<std::uint64_t>(where));
    const std::size_t n = shape_numel(t.shape);
    r.need(n * sizeof(double), where);
    t.values.resize(n);
    for (double& v : t.values) v = r.get<double>(where);
    c.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) throw CheckpointError("checkpoint has trailing bytes after the last tensor");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  const auto bytes = encode_checkpoint(c);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const BadMagic& e) {
    throw BadMagic(path.string() + ": " + e.what());
  } catch (const VersionMismatch& e) {
    throw VersionMismatch(path.string() + ": " + e.what());
  } catch (const TruncatedCheckpoint& e) {
    throw TruncatedCheckpoint(path.string() + ": " + e.what());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

Checkpoint make_checkpoint(const imu::LstmAutoencoder& m, const std::optional<data::ScalerParams>& scaler,
                           const std::map<std::string, std::string>& config) {
  return from_registry(ModelKind::imu_autoencoder, m.parameters(),
                       {{"arch.hidden1", std::to_string(m.enc1.hidden_size())},
                        {"arch.hidden2", std::to_string(m.enc2.hidden_size())}},
                       config, scaler);
}

Checkpoint make_checkpoint(const imu::LstmForecaster& m, const std::optional<data::ScalerParams>& scaler,
                           const std::map<std::string, std::string>& config) {
  return from_registry(ModelKind::imu_forecaster, m.parameters(),
                       {{"arch.hidden", std::to_string(m.encoder.hidden_size())}}, config, scaler);
}

Checkpoint make_checkpoint(const vision::CnnLstmForecaster& m, const std::map<std::string, std::string>& config) {
  const auto& a = m.codec.arch;
  return from_registry(ModelKind::vision_forecaster, m.parameters(),
                       {{"arch.size", std::to_string(a.size)},
                        {"arch.channels", join(a.channels)},
                        {"arch.strides", join(a.strides)},
                        {"arch.latent_channels", std::to_string(a.latent_channels)}},
                       config, std::nullopt);
}

AnyModel restore_model(const Checkpoint& c) {
  switch (c.kind) {
    case ModelKind::imu_autoencoder: {
      auto m = imu::LstmAutoencoder::init(0, config_size(c, "arch.hidden1"), config_size(c, "arch.hidden2"));
      fill(c, m.parameters());
      return m;
    }
    case ModelKind::imu_forecaster: {
      auto m = imu::LstmForecaster::init(0, config_size(c, "arch.hidden"));
      fill(c, m.parameters());
      return m;
    }
    case ModelKind::vision_forecaster: {
      vision::CodecArch a;
      a.size = config_size(c, "arch.size");
      a.latent_channels = config_size(c, "arch.latent_channels");
      for (const char* key : {"arch.channels", "arch.strides"}) {
        const auto it = c.config.find(key);
        if (it == c.config.end()) throw CheckpointError(std::string("checkpoint config lacks '") + key + "'");
        (std::string(key) == "arch.channels" ? a.channels : a.strides) = split_sizes(it->second, key);
      }
      auto m = vision::CnnLstmForecaster::init(a, 0);
      fill(c, m.parameters());
      return m;
    }
  }
  throw CheckpointError("unknown model kind");
}

}  // namespace adrf::pipeline
