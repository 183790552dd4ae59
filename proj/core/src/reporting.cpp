#include "gibbslab/reporting.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gibbslab/errors.hpp"

namespace gibbslab {

std::string format_double(double v) {
  if (!std::isfinite(v)) {
    fail(errc::io_error, "non-finite value has no JSON representation");
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

JsonValue JsonValue::array() {
  JsonValue v;
  v.type_ = Type::Array;
  return v;
}

JsonValue JsonValue::object() {
  JsonValue v;
  v.type_ = Type::Object;
  return v;
}

JsonValue& JsonValue::operator[](const std::string& key) {
  if (type_ == Type::Null) type_ = Type::Object;
  if (type_ != Type::Object) {
    fail(errc::io_error, "JSON member access on non-object");
  }
  for (auto& [k, v] : members_) {
    if (k == key) return v;
  }
  members_.emplace_back(key, JsonValue());
  return members_.back().second;
}

const JsonValue* JsonValue::find(const std::string& key) const {
  if (type_ != Type::Object) return nullptr;
  for (const auto& [k, v] : members_) {
    if (k == key) return &v;
  }
  return nullptr;
}

void JsonValue::push_back(JsonValue v) {
  if (type_ == Type::Null) type_ = Type::Array;
  if (type_ != Type::Array) {
    fail(errc::io_error, "JSON push_back on non-array");
  }
  items_.push_back(std::move(v));
}

std::size_t JsonValue::size() const {
  if (type_ == Type::Array) return items_.size();
  if (type_ == Type::Object) return members_.size();
  return 0;
}

namespace {

void escape_string(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void pad(std::string& out, int indent, int level) {
  if (indent > 0) out.append(static_cast<std::size_t>(indent) * level, ' ');
}

}  // namespace

void JsonValue::dump_to(std::string& out, int indent, int level) const {
  const char* nl = indent > 0 ? "\n" : "";
  switch (type_) {
    case Type::Null: out += "null"; break;
    case Type::Bool: out += bool_ ? "true" : "false"; break;
    case Type::Int: out += std::to_string(int_); break;
    case Type::UInt: out += std::to_string(uint_); break;
    case Type::Double: out += format_double(double_); break;
    case Type::String: escape_string(out, string_); break;
    case Type::Array: {
      if (items_.empty()) {
        out += "[]";
        break;
      }
      out += '[';
      out += nl;
      for (std::size_t i = 0; i < items_.size(); ++i) {
        pad(out, indent, level + 1);
        items_[i].dump_to(out, indent, level + 1);
        if (i + 1 < items_.size()) out += ',';
        out += nl;
      }
      pad(out, indent, level);
      out += ']';
      break;
    }
    case Type::Object: {
      if (members_.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      out += nl;
      for (std::size_t i = 0; i < members_.size(); ++i) {
        pad(out, indent, level + 1);
        escape_string(out, members_[i].first);
        out += indent > 0 ? ": " : ":";
        members_[i].second.dump_to(out, indent, level + 1);
        if (i + 1 < members_.size()) out += ',';
        out += nl;
      }
      pad(out, indent, level);
      out += '}';
      break;
    }
  }
}

std::string JsonValue::dump(int indent) const {
  std::string out;
  dump_to(out, indent, 0);
  if (indent > 0) out += '\n';
  return out;
}

CsvWriter::CsvWriter(const std::vector<std::string>& header)
    : width_(header.size()) {
  if (width_ == 0) fail(errc::io_error, "CSV header must not be empty");
  emit(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) {
    fail(errc::io_error, "CSV row width " + std::to_string(fields.size()) +
                             " does not match header width " +
                             std::to_string(width_));
  }
  emit(fields);
}

void CsvWriter::emit(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) text_ += ',';
    const std::string& f = fields[i];
    bool quote = f.find_first_of(",\"\r\n") != std::string::npos;
    if (!quote) {
      text_ += f;
    } else {
      text_ += '"';
      for (char c : f) {
        if (c == '"') text_ += '"';
        text_ += c;
      }
      text_ += '"';
    }
  }
  text_ += "\r\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(errc::io_error, "read failed on " + path);
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  std::string tmp = path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(errc::io_error, "cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      fail(errc::io_error, "write failed on " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(errc::io_error, "rename to " + path + " failed");
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(),
                 nullptr) != 1) {
    fail(errc::io_error, "sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

JsonValue manifest_fields(const RunManifest& m) {
  JsonValue j = JsonValue::object();
  j["system_path"] = m.system_path;
  j["system_sha256"] = m.system_sha256;
  j["depth"] = m.depth;
  j["tol"] = m.tol;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  return j;
}

JsonValue manifest_with_timing(const RunManifest& m) {
  JsonValue j = manifest_fields(m);
  JsonValue stages = JsonValue::object();
  for (const auto& [name, seconds] : m.stage_seconds) {
    stages[name] = seconds;
  }
  j["stage_seconds"] = std::move(stages);
  return j;
}

}  // namespace gibbslab
