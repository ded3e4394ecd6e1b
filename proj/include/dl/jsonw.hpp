#pragma once

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace dl {

// Formats a double for data files: decimal, round-trip exact, never locale
// dependent. %.17g guarantees >= 9 significant digits on anything nontrivial.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal append-only JSON writer with caller-controlled key order, used for
// every data artifact we emit so outputs are byte-stable across runs.
class JsonWriter {
 public:
  JsonWriter& begin_obj() {
    prefix();
    out_ += '{';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_obj() {
    out_ += '}';
    fresh_ = false;
    return *this;
  }
  JsonWriter& begin_arr() {
    prefix();
    out_ += '[';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_arr() {
    out_ += ']';
    fresh_ = false;
    return *this;
  }
  JsonWriter& key(const char* k) {
    prefix();
    append_quoted(k);
    out_ += ':';
    pending_value_ = true;
    return *this;
  }
  JsonWriter& value(double v) {
    prefix();
    out_ += fmt_double(v);
    return *this;
  }
  JsonWriter& value(int v) { return value(static_cast<long long>(v)); }
  JsonWriter& value(long long v) {
    prefix();
    out_ += std::to_string(v);
    return *this;
  }
  JsonWriter& value(unsigned long long v) {
    prefix();
    out_ += std::to_string(v);
    return *this;
  }
  JsonWriter& value(bool v) {
    prefix();
    out_ += v ? "true" : "false";
    return *this;
  }
  JsonWriter& value(const std::string& v) {
    prefix();
    append_quoted(v.c_str());
    return *this;
  }
  JsonWriter& value(const char* v) {
    prefix();
    append_quoted(v);
    return *this;
  }
  // Splices pre-serialized JSON in as a value; the caller owns its validity.
  JsonWriter& raw(const std::string& json) {
    prefix();
    out_ += json;
    return *this;
  }
  template <typename T>
  JsonWriter& kv(const char* k, const T& v) {
    key(k);
    return value(v);
  }
  JsonWriter& kv_arr(const char* k, const std::vector<double>& vs) {
    key(k);
    begin_arr();
    for (double v : vs) value(v);
    return end_arr();
  }

  const std::string& str() const { return out_; }
  void clear() {
    out_.clear();
    fresh_ = true;
    pending_value_ = false;
  }

 private:
  void prefix() {
    if (pending_value_) {
      pending_value_ = false;
      return;
    }
    if (!fresh_) out_ += ',';
    fresh_ = false;
  }
  void append_quoted(const char* s) {
    out_ += '"';
    for (const char* p = s; *p; ++p) {
      switch (*p) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        case '\r': out_ += "\\r"; break;
        default:
          if (static_cast<unsigned char>(*p) < 0x20) {
            char esc[8];
            std::snprintf(esc, sizeof(esc), "\\u%04x", *p);
            out_ += esc;
          } else {
            out_ += *p;
          }
      }
    }
    out_ += '"';
  }

  std::string out_;
  bool fresh_ = true;
  bool pending_value_ = false;
};

}  // namespace dl
