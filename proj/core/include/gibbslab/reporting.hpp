#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gibbslab {

// Canonical float text: fixed "%.17g" in the C locale, so emission is
// deterministic and parses back to the identical double. Non-finite values
// are refused (IoError) because the JSON grammar has no token for them.
std::string format_double(double v);

// Small write-oriented JSON document. Object keys keep insertion order;
// emitters list keys explicitly, which makes byte output reproducible.
class JsonValue {
 public:
  enum class Type { Null, Bool, Int, UInt, Double, String, Array, Object };

  JsonValue() : type_(Type::Null) {}
  JsonValue(bool b) : type_(Type::Bool), bool_(b) {}
  JsonValue(int v) : type_(Type::Int), int_(v) {}
  JsonValue(std::int64_t v) : type_(Type::Int), int_(v) {}
  JsonValue(std::uint64_t v) : type_(Type::UInt), uint_(v) {}
  JsonValue(double v) : type_(Type::Double), double_(v) {}
  JsonValue(const char* s) : type_(Type::String), string_(s) {}
  JsonValue(std::string s) : type_(Type::String), string_(std::move(s)) {}

  static JsonValue array();
  static JsonValue object();

  Type type() const { return type_; }
  bool is_object() const { return type_ == Type::Object; }
  bool is_array() const { return type_ == Type::Array; }

  // Object access; inserts a null member when the key is new.
  JsonValue& operator[](const std::string& key);
  const JsonValue* find(const std::string& key) const;

  void push_back(JsonValue v);
  std::size_t size() const;

  std::string dump(int indent = 2) const;

 private:
  void dump_to(std::string& out, int indent, int level) const;

  Type type_;
  bool bool_ = false;
  std::int64_t int_ = 0;
  std::uint64_t uint_ = 0;
  double double_ = 0.0;
  std::string string_;
  std::vector<JsonValue> items_;
  std::vector<std::pair<std::string, JsonValue>> members_;
};

// RFC 4180 table: header row first, every row the same width, fields quoted
// when they contain comma, quote or line breaks, records end in CRLF.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  const std::string& text() const { return text_; }

 private:
  void emit(const std::vector<std::string>& fields);

  std::size_t width_;
  std::string text_;
};

std::string read_file(const std::string& path);

// Writes to a sibling temp file, then renames over the target, so readers
// never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& bytes);

std::string sha256_hex(const std::string& bytes);

// Reproducibility metadata attached to every run. The timing table lives
// only in the standalone manifest file; result files embed the
// deterministic subset so a rerun with the same inputs is byte-identical.
struct RunManifest {
  std::string system_path;
  std::string system_sha256;
  int depth = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::vector<std::pair<std::string, double>> stage_seconds;
};

JsonValue manifest_fields(const RunManifest& m);
JsonValue manifest_with_timing(const RunManifest& m);

}  // namespace gibbslab
