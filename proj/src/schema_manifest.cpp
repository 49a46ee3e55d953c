// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/schema_manifest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "leds/error.hpp"

namespace leds {

using nlohmann::json;

namespace {

const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::scalar: return "scalar";
    case FieldKind::object_id: return "objectid";
    case FieldKind::bytes: return "bytes";
  }
  return "scalar";
}

FieldKind kind_of(const std::string& s) {
  if (s == "scalar") return FieldKind::scalar;
  if (s == "objectid") return FieldKind::object_id;
  if (s == "bytes") return FieldKind::bytes;
  throw Error(ErrorCode::config_error, "unknown field kind '" + s + "'");
}

json fields_json(const std::vector<FieldLayout>& fields) {
  json out = json::array();
  for (const auto& f : fields)
    out.push_back({{"name", f.name}, {"offset", f.offset}, {"size", f.size}, {"kind", kind_name(f.kind)}});
  return out;
}

std::vector<FieldLayout> fields_from(const json& arr) {
  std::vector<FieldLayout> out;
  std::uint64_t next = 0;
  for (const auto& f : arr) {
    FieldLayout l;
    l.name = f.at("name").get<std::string>();
    l.size = f.at("size").get<std::uint64_t>();
    l.kind = kind_of(f.value("kind", std::string("scalar")));
    l.offset = f.contains("offset") ? f.at("offset").get<std::uint64_t>() : next;
    next = l.offset + l.size;
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

InitRule make_init_rule(const InitSpec& spec) {
  if (spec.rule == "zero") return init::zero();
  if (spec.rule == "widen") return init::widen(spec.from);
  if (spec.rule == "int_to_f64") return init::int_to_f64(spec.from);
  throw Error(ErrorCode::config_error, "unknown init rule '" + spec.rule + "'");
}

void SchemaManifest::add(TypeDescriptor desc, std::vector<InitSpec> inits) {
  inits.resize(desc.max_level());
  types_.push_back({std::move(desc), std::move(inits)});
}

const TypeDescriptor& SchemaManifest::type(std::string_view name) const {
  for (const auto& t : types_)
    if (t.desc.name() == name) return t.desc;
  throw Error(ErrorCode::no_such_field, "manifest has no type '" + std::string(name) + "'");
}

std::uint64_t SchemaManifest::fingerprint() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : types_) {
    std::uint64_t f = t.desc.fingerprint();
    for (int i = 0; i < 8; ++i) {
      h ^= (f >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h == 0 ? 1 : h;
}

std::string SchemaManifest::to_json() const {
  json types = json::array();
  for (const auto& t : types_) {
    json exts = json::array();
    for (const auto& e : t.desc.extensions()) {
      const InitSpec& spec = t.inits[e.level - 1];
      json init = {{"rule", spec.rule}};
      if (!spec.from.empty()) init["from"] = spec.from;
      exts.push_back({{"fields", fields_json(e.payload_fields)}, {"init", init}});
    }
    types.push_back({{"name", t.desc.name()},
                     {"fields", fields_json(t.desc.base_fields())},
                     {"extensions", exts}});
  }
  return json{{"types", types}}.dump(2);
}

SchemaManifest SchemaManifest::parse(std::string_view json_text) {
  SchemaManifest m;
  try {
    json doc = json::parse(json_text);
    for (const auto& t : doc.at("types")) {
      TypeDescriptor d = define_type(t.at("name").get<std::string>(), fields_from(t.at("fields")));
      std::vector<InitSpec> inits;
      for (const auto& e : t.value("extensions", json::array())) {
        InitSpec spec;
        if (e.contains("init")) {
          spec.rule = e["init"].value("rule", std::string("zero"));
          spec.from = e["init"].value("from", std::string());
        }
        d = append_extension(d, fields_from(e.at("fields")), make_init_rule(spec));
        inits.push_back(std::move(spec));
      }
      m.add(std::move(d), std::move(inits));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("malformed schema manifest: ") + e.what());
  }
  return m;
}

SchemaManifest SchemaManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void SchemaManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write manifest " + path.string());
  out << to_json() << '\n';
}

}  // namespace leds
