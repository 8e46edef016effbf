#include <json.hpp>

#include "sercg/oracle.hpp"

namespace sercg::oracle {

using nlohmann::ordered_json;

namespace {

ordered_json value_json(const FormValue& v) {
  return std::visit(
      [](const auto& x) -> ordered_json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, RecordRef>) return {{"ref", x.id}};
        else return x;
      },
      v);
}

FormValue value_from(const ordered_json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.contains("ref")) return RecordRef{j.at("ref").get<std::size_t>()};
  throw std::invalid_argument("bad form value: " + j.dump());
}

const char* kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::Object: return "object";
    case RecordKind::Array: return "array";
    case RecordKind::List: return "list";
    case RecordKind::Set: return "set";
    case RecordKind::Map: return "map";
  }
  return "?";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string form_to_json(const SerializedForm& form) {
  ordered_json records = ordered_json::array();
  for (const auto& r : form.records) {
    ordered_json j{{"kind", kind_name(r.kind)}};
    if (r.kind == RecordKind::Object) j["class"] = r.type;
    if (r.kind == RecordKind::Array) j["elem"] = r.type;
    if (r.kind == RecordKind::Object) {
      ordered_json fields = ordered_json::object();
      for (const auto& [k, v] : r.fields) fields[k] = value_json(v);
      j["fields"] = fields;
    } else {
      ordered_json elems = ordered_json::array();
      for (const auto& v : r.elems) elems.push_back(value_json(v));
      j["elems"] = elems;
    }
    if (!r.custom.empty()) {
      ordered_json c = ordered_json::array();
      for (const auto& v : r.custom) c.push_back(value_json(v));
      j["custom"] = c;
    }
    if (!r.missing_supers.empty()) j["missing_supers"] = r.missing_supers;
    records.push_back(j);
  }
  ordered_json out{{"schema", "sercg.form/1"},
                   {"channel", form.channel},
                   {"root", value_json(form.root)},
                   {"records", records}};
  return out.dump(2) + "\n";
}

SerializedForm form_from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("form is not JSON: ") + e.what());
  }
  try {
    SerializedForm f;
    f.channel = j.at("channel").get<std::string>();
    f.root = value_from(j.at("root"));
    for (const auto& r : j.at("records")) {
      Record rec;
      std::string kind = r.at("kind").get<std::string>();
      if (kind == "object") rec.kind = RecordKind::Object;
      else if (kind == "array") rec.kind = RecordKind::Array;
      else if (kind == "list") rec.kind = RecordKind::List;
      else if (kind == "set") rec.kind = RecordKind::Set;
      else if (kind == "map") rec.kind = RecordKind::Map;
      else throw std::invalid_argument("bad record kind " + kind);
      if (r.contains("class")) rec.type = r.at("class").get<std::string>();
      if (r.contains("elem")) rec.type = r.at("elem").get<std::string>();
      if (r.contains("fields"))
        for (const auto& [k, v] : r.at("fields").items()) rec.fields.emplace_back(k, value_from(v));
      if (r.contains("elems"))
        for (const auto& v : r.at("elems")) rec.elems.push_back(value_from(v));
      if (r.contains("custom"))
        for (const auto& v : r.at("custom")) rec.custom.push_back(value_from(v));
      if (r.contains("missing_supers")) rec.missing_supers = r.at("missing_supers").get<std::vector<std::string>>();
      f.records.push_back(std::move(rec));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed form: ") + e.what());
  }
}

RecordRef FormBuilder::object(std::string cls) {
  Record r;
  r.type = std::move(cls);
  form_.records.push_back(std::move(r));
  return {form_.records.size() - 1};
}

RecordRef FormBuilder::array(std::string elem_type) {
  Record r;
  r.kind = RecordKind::Array;
  r.type = std::move(elem_type);
  form_.records.push_back(std::move(r));
  return {form_.records.size() - 1};
}

RecordRef FormBuilder::container(RecordKind kind) {
  Record r;
  r.kind = kind;
  form_.records.push_back(std::move(r));
  return {form_.records.size() - 1};
}

FormBuilder& FormBuilder::set(RecordRef r, std::string field, FormValue v) {
  form_.records.at(r.id).fields.emplace_back(std::move(field), std::move(v));
  return *this;
}

FormBuilder& FormBuilder::add(RecordRef r, FormValue v) {
  form_.records.at(r.id).elems.push_back(std::move(v));
  return *this;
}

FormBuilder& FormBuilder::custom(RecordRef r, FormValue v) {
  form_.records.at(r.id).custom.push_back(std::move(v));
  return *this;
}

FormBuilder& FormBuilder::missing_super(RecordRef r, std::string cls) {
  form_.records.at(r.id).missing_supers.push_back(std::move(cls));
  return *this;
}

SerializedForm FormBuilder::build(FormValue root) const {
  SerializedForm f = form_;
  f.root = std::move(root);
  return f;
}

std::string DynamicCallGraph::to_json() const {
  ordered_json edges_json = ordered_json::array();
  for (const auto& [e, n] : edges) edges_json.push_back({{"caller", e.first}, {"callee", e.second}, {"count", n}});
  ordered_json out{{"schema", "sercg.dcg/1"}, {"edges", edges_json}};
  return out.dump(2) + "\n";
}

std::string DynamicCallGraph::to_csv() const {
  std::string out = "caller,callee,count\n";
  for (const auto& [e, n] : edges) out += csv_field(e.first) + "," + csv_field(e.second) + "," + std::to_string(n) + "\n";
  return out;
}

}  // namespace sercg::oracle
