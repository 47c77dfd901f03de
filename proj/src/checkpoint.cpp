/*
 * Copyright 2026 The SHIELD-CL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shield/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shield/errors.hpp"

namespace shield {

namespace {

using nlohmann::json;

json tensor_json(const Tensor& t) { return json{{"shape", t.shape}, {"data", t.data}}; }

Tensor tensor_from(const json& j) { return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>()); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  const Model& m = c.model;
  json doc;
  doc["format_version"] = kCheckpointVersion;
  doc["network"] = {{"input_shape", m.spec.input_shape},
                    {"layers", format_layers(m.spec.layers)},
                    {"classes", m.spec.classes},
                    {"bn_stability", m.spec.bn_stability}};
  json layout = json::array();
  for (const auto& e : m.spec.layout().entries) {
    layout.push_back({{"layer", e.layer}, {"name", e.name}, {"offset", e.offset}, {"shape", e.shape}});
  }
  doc["layout"] = layout;
  json weights = json::array();
  for (const auto& w : m.hnet.weights()) weights.push_back(tensor_json(w));
  json embeddings = json::array();
  json frozen = json::array();
  for (std::size_t t = 1; t <= m.hnet.task_count(); ++t) {
    embeddings.push_back(tensor_json(m.hnet.embedding(t)));
    frozen.push_back(m.hnet.frozen(t));
  }
  doc["hypernetwork"] = {{"embedding_dim", m.hnet.embedding_dim()},
                         {"hidden", m.hnet.hidden()},
                         {"output_dim", m.hnet.output_dim()},
                         {"weights", weights},
                         {"embeddings", embeddings},
                         {"frozen", frozen}};
  json norms = json::array();
  for (const auto& n : m.norms) {
    json layers = json::array();
    for (const auto& s : n.layers) layers.push_back({{"mean", tensor_json(s.mean)}, {"var", tensor_json(s.var)}});
    norms.push_back(layers);
  }
  doc["norms"] = norms;
  doc["seed"] = c.seed;
  doc["tasks_completed"] = m.tasks_trained;
  json rows = json::array();
  for (std::size_t t = 1; t <= m.tasks_trained && t <= c.accuracy.size(); ++t) {
    json row = json::array();
    for (std::size_t s = 1; s <= t; ++s) row.push_back(c.accuracy.at(t, s));
    rows.push_back(row);
  }
  doc["accuracy"] = {{"tasks", c.accuracy.size()}, {"rows", rows}};
  doc["config"] = c.config;
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    Model& m = c.model;
    const json& net = doc.at("network");
    m.spec.input_shape = net.at("input_shape").get<Shape>();
    m.spec.layers = parse_layers(net.at("layers").get<std::string>());
    m.spec.classes = net.at("classes").get<std::size_t>();
    m.spec.bn_stability = net.at("bn_stability").get<double>();
    const ParamLayout layout = m.spec.layout();
    const json& stored = doc.at("layout");
    if (stored.size() != layout.entries.size()) throw DataError("checkpoint layout does not match its network");
    for (std::size_t i = 0; i < stored.size(); ++i) {
      const auto& e = layout.entries[i];
      if (stored[i].at("layer").get<std::size_t>() != e.layer || stored[i].at("name").get<std::string>() != e.name ||
          stored[i].at("offset").get<std::size_t>() != e.offset || stored[i].at("shape").get<Shape>() != e.shape) {
        throw DataError("checkpoint layout entry " + std::to_string(i) + " does not match its network");
      }
    }
    const json& h = doc.at("hypernetwork");
    std::vector<Tensor> weights, embeddings;
    for (const auto& w : h.at("weights")) weights.push_back(tensor_from(w));
    for (const auto& e : h.at("embeddings")) embeddings.push_back(tensor_from(e));
    m.hnet = Hypernetwork::from_parts(h.at("embedding_dim").get<std::size_t>(),
                                      h.at("hidden").get<std::vector<std::size_t>>(),
                                      h.at("output_dim").get<std::size_t>(), std::move(weights), std::move(embeddings),
                                      h.at("frozen").get<std::vector<bool>>());
    if (m.hnet.output_dim() != layout.total) throw DataError("hypernetwork output does not match the layout");
    for (const auto& n : doc.at("norms")) {
      NormState state;
      for (const auto& s : n) state.layers.push_back({tensor_from(s.at("mean")), tensor_from(s.at("var"))});
      m.norms.push_back(std::move(state));
    }
    c.seed = doc.at("seed").get<std::uint64_t>();
    m.tasks_trained = doc.at("tasks_completed").get<std::size_t>();
    const json& acc = doc.at("accuracy");
    c.accuracy = ResultMatrix(acc.at("tasks").get<std::size_t>());
    const json& rows = acc.at("rows");
    for (std::size_t t = 0; t < rows.size(); ++t) {
      for (std::size_t s = 0; s < rows[t].size(); ++s) c.accuracy.set(t + 1, s + 1, rows[t][s].get<double>());
    }
    c.config = doc.at("config").get<std::string>();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize_checkpoint(checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace shield
