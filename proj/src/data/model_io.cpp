#include "flowbench/data/model_io.hpp"

#include "flowbench/data/io.hpp"
#include "flowbench/error.hpp"

namespace flowbench {
namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from(const json& j) {
  if (!j.is_array()) throw CorruptFile("expected a number array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw CorruptFile("non-numeric entry in array");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from(const json& j) {
  if (!j.is_array() || j.empty()) throw CorruptFile("expected a non-empty nested array");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw CorruptFile("matrix row is empty");
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw CorruptFile("ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw CorruptFile("non-numeric matrix entry");
      m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

json mlp_json(const Mlp& net) {
  json a = json::array();
  for (const auto& l : net.layers) a.push_back({{"weight", matrix_json(l.weight)}, {"bias", vector_json(l.bias)}});
  return a;
}

Mlp mlp_from(const json& j, Activation act, Index in, Index out) {
  if (!j.is_array() || j.empty()) throw CorruptFile("coupling network has no layers");
  Mlp net;
  net.activation = act;
  Index prev = in;
  for (const auto& l : j) {
    DenseLayer d{matrix_from(l.at("weight")), vector_from(l.at("bias"))};
    if (d.weight.rows() != prev || d.bias.size() != d.weight.cols()) throw CorruptFile("layer shapes do not chain");
    prev = d.weight.cols();
    net.layers.push_back(std::move(d));
  }
  if (prev != out) throw CorruptFile("coupling network output width does not match");
  return net;
}

}  // namespace

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"n_coupling", c.n_coupling},
          {"hidden_dim", c.hidden_dim},
          {"n_hidden_layers", c.n_hidden_layers},
          {"activation", std::string(to_string(c.activation))},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("training config must be a JSON object");
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    try {
      if (k == "epochs") c.epochs = v.get<int>();
      else if (k == "batch_size") c.batch_size = v.get<int>();
      else if (k == "learning_rate") c.learning_rate = v.get<double>();
      else if (k == "weight_decay") c.weight_decay = v.get<double>();
      else if (k == "beta1") c.beta1 = v.get<double>();
      else if (k == "beta2") c.beta2 = v.get<double>();
      else if (k == "eps") c.eps = v.get<double>();
      else if (k == "n_coupling") c.n_coupling = v.get<int>();
      else if (k == "hidden_dim") c.hidden_dim = v.get<int>();
      else if (k == "n_hidden_layers") c.n_hidden_layers = v.get<int>();
      else if (k == "activation") c.activation = parse_activation(v.get<std::string>());
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else throw InvalidArgument("unknown training config key '" + k + "'");
    } catch (const json::exception& e) {
      throw InvalidArgument("training config key '" + k + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

json bundle_to_json(const ModelBundle& b) {
  const FlowModel& m = b.model;
  json layers = json::array();
  for (const auto& l : m.layers) {
    json jl{{"parity", l.parity == Parity::even ? "even" : "odd"}, {"shift", mlp_json(l.shift)}};
    if (m.kind == FlowKind::realnvp) {
      jl["log_scale"] = mlp_json(l.log_scale);
      jl["scale"] = vector_json(l.scale);
    }
    layers.push_back(std::move(jl));
  }
  json j{{"format_version", kModelFormatVersion},
         {"kind", std::string(to_string(m.kind))},
         {"input_dim", m.input_dim},
         {"padded", m.padded},
         {"config", to_json(m.config)},
         {"layers", std::move(layers)},
         {"scaler",
          {{"kind", std::string(to_string(b.scaler.kind))},
           {"center", vector_json(b.scaler.center)},
           {"scale", vector_json(b.scaler.scale)}}},
         {"train_nll_mean", b.train_nll_mean},
         {"provenance", b.provenance}};
  if (m.kind == FlowKind::nice) j["scaling_logs"] = vector_json(m.scaling_logs);
  return j;
}

ModelBundle bundle_from_json(const json& j) {
  if (!j.is_object()) throw CorruptFile("model document is not a JSON object");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw CorruptFile("missing format_version");
  const int version = j["format_version"].get<int>();
  if (version != kModelFormatVersion)
    throw SchemaVersionMismatch("model format " + std::to_string(version) + ", expected " +
                                std::to_string(kModelFormatVersion));
  try {
    ModelBundle b;
    FlowModel& m = b.model;
    m.kind = parse_flow_kind(j.at("kind").get<std::string>());
    m.input_dim = j.at("input_dim").get<Index>();
    m.padded = j.at("padded").get<bool>();
    if (m.input_dim < 1 || m.padded != (m.input_dim % 2 == 1)) throw CorruptFile("inconsistent input_dim/padded");
    m.config = train_config_from_json(j.at("config"));
    const Index h = m.half_dim();
    const json& layers = j.at("layers");
    if (!layers.is_array() || layers.empty()) throw CorruptFile("no coupling layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const json& jl = layers[i];
      CouplingLayer l;
      const std::string parity = jl.at("parity").get<std::string>();
      if (parity != "even" && parity != "odd") throw CorruptFile("bad parity '" + parity + "'");
      l.parity = parity == "even" ? Parity::even : Parity::odd;
      if (l.parity != (i % 2 == 0 ? Parity::even : Parity::odd)) throw CorruptFile("coupling parities must alternate");
      l.shift = mlp_from(jl.at("shift"), m.config.activation, h, h);
      if (m.kind == FlowKind::realnvp) {
        l.log_scale = mlp_from(jl.at("log_scale"), m.config.activation, h, h);
        l.scale = vector_from(jl.at("scale"));
        if (l.scale.size() != h) throw CorruptFile("scale vector has wrong length");
      }
      m.layers.push_back(std::move(l));
    }
    if (m.kind == FlowKind::nice) {
      m.scaling_logs = vector_from(j.at("scaling_logs"));
      if (m.scaling_logs.size() != m.internal_dim()) throw CorruptFile("scaling_logs has wrong length");
    }
    const json& s = j.at("scaler");
    b.scaler.kind = parse_scaler_kind(s.at("kind").get<std::string>());
    b.scaler.center = vector_from(s.at("center"));
    b.scaler.scale = vector_from(s.at("scale"));
    if (b.scaler.center.size() != m.input_dim || b.scaler.scale.size() != m.input_dim)
      throw CorruptFile("scaler length does not match input_dim");
    b.train_nll_mean = j.at("train_nll_mean").get<double>();
    if (j.contains("provenance")) b.provenance = j["provenance"];
    return b;
  } catch (const json::exception& e) {
    throw CorruptFile(e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptFile(e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelBundle& b) {
  write_file_atomic(path, bundle_to_json(b).dump(1) + "\n");
}

ModelBundle load_model(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptFile("'" + path.string() + "': " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace flowbench
