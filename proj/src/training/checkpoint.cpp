// SPDX-License-Identifier: Apache-2.0
#include "tabgen/training/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "tabgen/common/error.hpp"
#include "tabgen/common/hash.hpp"

namespace tabgen {

const Tensor* Checkpoint::extra(const std::string& name) const {
  for (const auto& [n, t] : extras)
    if (n == name) return &t;
  return nullptr;
}

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw TruncatedError(std::string("checkpoint truncated reading ") + what);
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T get_le(const char* what) {
    const auto s = take(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_blob(std::string& out, const std::string& name, const Tensor& t) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_le<std::uint64_t>(out, 4ULL * t.size());
  for (double v : t.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

nlohmann::json shape_json(const Tensor& t) { return t.shape(); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.schema) throw ContractError("checkpoint has no schema");
  const ModelDims& d = ckpt.model.dims();
  nlohmann::json blobs = nlohmann::json::array();
  for (const Parameter* p : ckpt.model.parameters()) blobs.push_back({{"name", p->name}, {"shape", shape_json(p->value)}});
  for (const auto& [name, t] : ckpt.extras) blobs.push_back({{"name", name}, {"shape", shape_json(t)}});

  const nlohmann::json meta{{"config", ckpt.config.to_json()},
                            {"schema", ckpt.schema->to_json()},
                            {"schema_hash", ckpt.schema->content_hash()},
                            {"dims", {{"cardinalities", d.cardinalities}, {"E", d.embedding}, {"h", d.latent}}},
                            {"epoch", ckpt.epoch},
                            {"best_epoch", ckpt.best_epoch},
                            {"best_loss", ckpt.best_loss},
                            {"blobs", blobs}};
  const std::string meta_text = meta.dump();

  std::string out(kCheckpointMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, meta_text.size());
  out += meta_text;
  for (const Parameter* p : ckpt.model.parameters()) put_blob(out, p->name, p->value);
  for (const auto& [name, t] : ckpt.extras) put_blob(out, name, t);
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes, const std::optional<std::string>& expected_schema_hash) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw MagicError("not a checkpoint (bad magic)");
  in.take(4, "magic");
  const auto version = in.get_le<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  const auto meta_len = in.get_le<std::uint64_t>("metadata length");
  const auto meta_text = in.take(meta_len, "metadata");

  Checkpoint ck;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
    Schema schema = Schema::from_json(meta.at("schema"));
    const std::string recorded = meta.at("schema_hash");
    if (schema.content_hash() != recorded) throw SchemaMismatchError("checkpoint schema does not match its recorded hash");
    if (expected_schema_hash && *expected_schema_hash != recorded)
      throw SchemaMismatchError("checkpoint schema hash " + recorded + " does not match expected " + *expected_schema_hash);
    ck.schema = std::make_shared<const Schema>(std::move(schema));
    ck.config = TrainingConfig::from_json(meta.at("config"));
    ModelDims d;
    d.cardinalities = meta.at("dims").at("cardinalities").get<std::vector<std::uint32_t>>();
    d.embedding = meta.at("dims").at("E");
    d.latent = meta.at("dims").at("h");
    if (d.cardinalities != ck.schema->cardinalities())
      throw SchemaMismatchError("checkpoint dims do not match its schema");
    ck.model = CvaeModel(d);
    ck.epoch = meta.at("epoch");
    ck.best_epoch = meta.at("best_epoch");
    ck.best_loss = meta.at("best_loss");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  }

  const auto params = ck.model.parameters();
  const auto& manifest = meta.at("blobs");
  if (manifest.size() < params.size()) throw CheckpointError("checkpoint manifest lists too few blobs");
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const std::string name = manifest[i].at("name");
    const auto shape = manifest[i].at("shape").get<std::vector<std::size_t>>();
    const auto name_len = in.get_le<std::uint32_t>("blob name length");
    const auto got_name = in.take(name_len, "blob name");
    if (got_name != name) throw CheckpointError("blob '" + std::string(got_name) + "' out of manifest order");
    Tensor t(shape);
    const auto byte_len = in.get_le<std::uint64_t>("blob length");
    if (byte_len != 4ULL * t.size())
      throw CheckpointError("blob '" + name + "' length " + std::to_string(byte_len) + " does not match manifest");
    const auto payload = in.take(byte_len, "blob payload");
    for (std::size_t k = 0; k < t.size(); ++k) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * k + b])) << (8 * b);
      t[k] = static_cast<double>(std::bit_cast<float>(u));
    }
    if (i < params.size()) {
      if (params[i]->name != name || !params[i]->value.same_shape(t))
        throw CheckpointError("blob '" + name + "' does not match the model layout");
      params[i]->value = std::move(t);
    } else {
      ck.extras.emplace_back(name, std::move(t));
    }
  }
  if (!in.done()) throw CheckpointError("trailing bytes after last blob");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_schema_hash) {
  return parse_checkpoint(read_file(path), expected_schema_hash);
}

void round_to_f32(CvaeModel& model) {
  for (Parameter* p : model.parameters())
    for (double& v : p->value.values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace tabgen
