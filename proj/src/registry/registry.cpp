// Copyright 2026 The Edgeflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "edgeflow/registry/registry.hpp"

#include <algorithm>

#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"
#include "edgeflow/util/zip.hpp"

namespace edgeflow {

std::string to_string(ModelStage s) {
  switch (s) {
    case ModelStage::none: return "none";
    case ModelStage::staging: return "staging";
    case ModelStage::production: return "production";
    case ModelStage::archived: return "archived";
  }
  return "none";
}

ModelStage parse_model_stage(std::string_view s) {
  if (s == "none") return ModelStage::none;
  if (s == "staging") return ModelStage::staging;
  if (s == "production") return ModelStage::production;
  if (s == "archived") return ModelStage::archived;
  throw Error(Errc::invalid_argument, "unknown stage '" + std::string(s) + "'");
}

void to_json(json& j, const ModelRecord& v) {
  j = json{{"name", v.name},         {"version", v.version},   {"payload", v.payload},
           {"metadata", v.metadata}, {"tags", v.tags},         {"stage", to_string(v.stage)},
           {"created_ms", v.created_ms}};
}

void from_json(const json& j, ModelRecord& v) {
  v.name = j.at("name").get<std::string>();
  v.version = j.at("version").get<int>();
  v.payload = j.at("payload").get<ArtifactRef>();
  v.metadata = j.value("metadata", std::map<std::string, std::string>{});
  v.tags = j.value("tags", std::set<std::string>{});
  v.stage = parse_model_stage(j.value("stage", std::string("none")));
  v.created_ms = j.value("created_ms", std::int64_t{0});
}

void to_json(json& j, const ModelSelector& v) {
  j = json{{"name", v.name}};
  switch (v.kind) {
    case ModelSelector::Kind::latest: j["latest"] = true; break;
    case ModelSelector::Kind::version: j["version"] = v.version; break;
    case ModelSelector::Kind::tag: j["tag"] = v.tag; break;
    case ModelSelector::Kind::stage: j["stage"] = to_string(v.stage); break;
  }
}

void from_json(const json& j, ModelSelector& v) {
  v = ModelSelector::latest(j.at("name").get<std::string>());
  if (j.contains("version")) {
    v.kind = ModelSelector::Kind::version;
    v.version = j.at("version").get<int>();
  } else if (j.contains("tag")) {
    v.kind = ModelSelector::Kind::tag;
    v.tag = j.at("tag").get<std::string>();
  } else if (j.contains("stage")) {
    v.kind = ModelSelector::Kind::stage;
    v.stage = parse_model_stage(j.at("stage").get<std::string>());
  }
}

Registry::Registry(BlobStore& store, std::filesystem::path log_path, RegistryOptions options)
    : store_(store), log_path_(std::move(log_path)), options_(options) {
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  replay();
  terminate_partial_line(log_path_);
  log_.open(log_path_, std::ios::app);
  if (!log_) throw Error(Errc::io_error, "cannot open registry log " + log_path_.string());
}

void Registry::replay() {
  std::ifstream in(log_path_);
  if (!in) return;
  for (std::string line; std::getline(in, line);) {
    json entry;
    try {
      entry = json::parse(line);
    } catch (const json::exception&) {
      continue;  // torn final write from a crash
    }
    auto op = entry.value("op", std::string());
    if (op == "register") {
      auto rec = entry.at("record").get<ModelRecord>();
      auto& versions = models_[rec.name];
      if (rec.version != static_cast<int>(versions.size()) + 1) continue;
      versions.push_back(std::move(rec));
    } else if (op == "stage") {
      auto it = models_.find(entry.at("name").get<std::string>());
      int version = entry.at("version").get<int>();
      if (it == models_.end() || version < 1 || version > static_cast<int>(it->second.size())) {
        continue;
      }
      apply_stage(it->second, version, parse_model_stage(entry.at("stage").get<std::string>()));
    }
  }
}

void Registry::append(const json& entry) {
  log_ << entry.dump() << '\n';
  log_.flush();
  if (!log_) throw Error(Errc::io_error, "registry log write failed");
}

void Registry::apply_stage(std::vector<ModelRecord>& versions, int version, ModelStage stage) {
  if (stage == ModelStage::production) {
    for (auto& r : versions) {
      if (r.stage == ModelStage::production && r.version != version) r.stage = ModelStage::archived;
    }
  }
  versions[version - 1].stage = stage;
}

void Registry::validate_metadata(const std::map<std::string, std::string>& metadata) {
  for (const auto& [k, v] : metadata) {
    bool key_ok = !k.empty() && k.size() <= 64 &&
                  std::all_of(k.begin(), k.end(), [](char c) {
                    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
                  });
    if (!key_ok) throw Error(Errc::invalid_name, "invalid metadata key '" + k + "'");
    if (v.size() > kMaxMetadataValue) {
      throw Error(Errc::invalid_argument, "metadata value for '" + k + "' exceeds 4 KiB");
    }
  }
}

ModelRecord Registry::register_model(const std::string& name, std::string_view payload,
                                     std::map<std::string, std::string> metadata,
                                     std::set<std::string> tags) {
  if (!is_identifier(name, 64)) throw Error(Errc::invalid_name, "invalid model name '" + name + "'");
  if (static_cast<std::int64_t>(payload.size()) > options_.max_payload_bytes) {
    throw Error(Errc::payload_too_large, "payload of " + std::to_string(payload.size()) +
                                             " bytes exceeds cap");
  }
  validate_metadata(metadata);

  std::lock_guard writer(writer_mu_);
  int version = 1;
  {
    std::shared_lock lock(state_mu_);
    if (auto it = models_.find(name); it != models_.end()) {
      version = static_cast<int>(it->second.size()) + 1;
    }
  }
  ModelRecord rec;
  rec.name = name;
  rec.version = version;
  rec.payload = store_.put(kBucket, name + ".v" + std::to_string(version), payload);
  rec.metadata = std::move(metadata);
  rec.tags = std::move(tags);
  rec.created_ms = now_ms();

  append(json{{"op", "register"}, {"record", rec}});
  std::unique_lock lock(state_mu_);
  models_[name].push_back(rec);
  return rec;
}

ModelRecord Registry::register_model(const std::string& name, const ArtifactRef& payload,
                                     std::map<std::string, std::string> metadata,
                                     std::set<std::string> tags) {
  auto obj = store_.get(payload.bucket, payload.key);
  if (obj.record.ref.digest != payload.digest) {
    throw Error(Errc::digest_mismatch, "payload " + payload.key + " changed since it was referenced");
  }
  return register_model(name, obj.bytes, std::move(metadata), std::move(tags));
}

ModelRecord Registry::resolve(const ModelSelector& selector) const {
  std::shared_lock lock(state_mu_);
  auto it = models_.find(selector.name);
  if (it == models_.end() || it->second.empty()) {
    throw Error(Errc::not_found, "no model named '" + selector.name + "'");
  }
  const auto& versions = it->second;
  switch (selector.kind) {
    case ModelSelector::Kind::latest:
      return versions.back();
    case ModelSelector::Kind::version:
      if (selector.version < 1 || selector.version > static_cast<int>(versions.size())) {
        throw Error(Errc::not_found, selector.name + " has no version " + std::to_string(selector.version));
      }
      return versions[selector.version - 1];
    case ModelSelector::Kind::tag:
      for (auto r = versions.rbegin(); r != versions.rend(); ++r) {
        if (r->tags.contains(selector.tag)) return *r;
      }
      throw Error(Errc::not_found, selector.name + " has no version tagged '" + selector.tag + "'");
    case ModelSelector::Kind::stage:
      for (const auto& r : versions) {
        if (r.stage == selector.stage) return r;
      }
      throw Error(Errc::no_such_stage_assignment,
                  selector.name + " has no version in stage " + to_string(selector.stage));
  }
  throw Error(Errc::not_found, "bad selector");
}

ModelRecord Registry::set_stage(const std::string& name, int version, ModelStage stage) {
  std::lock_guard writer(writer_mu_);
  {
    std::shared_lock lock(state_mu_);
    auto it = models_.find(name);
    if (it == models_.end() || version < 1 || version > static_cast<int>(it->second.size())) {
      throw Error(Errc::not_found, "no model " + name + " v" + std::to_string(version));
    }
  }
  append(json{{"op", "stage"}, {"name", name}, {"version", version}, {"stage", to_string(stage)}});
  std::unique_lock lock(state_mu_);
  auto& versions = models_.at(name);
  apply_stage(versions, version, stage);
  return versions[version - 1];
}

std::string Registry::package_model(const std::string& name, int version) const {
  auto rec = resolve(ModelSelector::at_version(name, version));
  auto payload = store_.get(rec.payload.bucket, rec.payload.key);
  json manifest{{"name", rec.name},
                {"version", rec.version},
                {"digest", rec.payload.digest},
                {"size_bytes", rec.payload.size_bytes},
                {"metadata", rec.metadata}};
  return zip::write_stored({{"manifest.json", manifest.dump(2) + "\n"},
                            {"payload.bin", std::move(payload.bytes)}});
}

std::vector<std::string> Registry::names() const {
  std::shared_lock lock(state_mu_);
  std::vector<std::string> out;
  for (const auto& [name, _] : models_) out.push_back(name);
  return out;
}

std::vector<ModelRecord> Registry::versions(const std::string& name) const {
  std::shared_lock lock(state_mu_);
  auto it = models_.find(name);
  if (it == models_.end()) return {};
  return it->second;
}

}  // namespace edgeflow
