#include "lcsac/checkpoint.hpp"

#include <json.hpp>

#include "lcsac/errors.hpp"
#include "lcsac/io.hpp"

namespace lcsac {

using nlohmann::json;

void Checkpoint::save(const std::string& path) const {
  json doc;
  doc["format"] = "lcsac-checkpoint";
  doc["version"] = kFormatVersion;
  doc["env_step"] = env_step;
  doc["config_hash"] = config_hash;
  json secs = json::object();
  for (const auto& [name, params] : sections) {
    json sec = json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
      json entry;
      entry["name"] = params.name(i);
      entry["shape"] = params.at(i).shape();
      entry["data"] = params.at(i).values();
      sec.push_back(std::move(entry));
    }
    secs[name] = std::move(sec);
  }
  doc["sections"] = std::move(secs);
  write_file_atomic(path, doc.dump());
}

Checkpoint Checkpoint::load(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("checkpoint '" + path + "': " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "lcsac-checkpoint")
    throw IoError("checkpoint '" + path + "': not a checkpoint file");
  if (doc.value("version", -1) != kFormatVersion)
    throw IoError("checkpoint '" + path + "': unsupported version " +
                  std::to_string(doc.value("version", -1)));
  Checkpoint ck;
  ck.env_step = doc.value("env_step", std::int64_t{0});
  ck.config_hash = doc.value("config_hash", std::uint64_t{0});
  for (const auto& [name, sec] : doc.at("sections").items()) {
    ParamSet ps;
    for (const auto& entry : sec) {
      const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
      auto data = entry.at("data").get<std::vector<double>>();
      Tensor t = shape.size() == 1
                     ? Tensor::vector(std::move(data))
                     : Tensor::matrix(shape[0], shape[1], std::move(data));
      ps.add(entry.at("name").get<std::string>(), std::move(t));
    }
    ck.sections.emplace(name, std::move(ps));
  }
  return ck;
}

}  // namespace lcsac
