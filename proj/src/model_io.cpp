#include "hmmon/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hmmon/errors.hpp"

namespace hmmon {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string location(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

json parse_document(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(std::string(source) + ":" + location(text, at) + ": " + e.what());
  }
}

// Small schema helpers; errors name the document and the offending field.
class Reader {
 public:
  explicit Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(std::string(source_) + ": " + what);
  }

  const json& field(const json& obj, const char* key, const char* where) const {
    if (!obj.is_object()) fail(std::string(where) + " must be an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "' in " + where);
    return *it;
  }

  std::string string_field(const json& obj, const char* key, const char* where) const {
    const auto& v = field(obj, key, where);
    if (!v.is_string()) fail(std::string("field '") + key + "' in " + where + " must be a string");
    return v.get<std::string>();
  }

  const json& array_field(const json& obj, const char* key, const char* where) const {
    const auto& v = field(obj, key, where);
    if (!v.is_array()) fail(std::string("field '") + key + "' in " + where + " must be an array");
    return v;
  }

  Rational rational_field(const json& obj, const char* key, const char* where) const {
    const auto& v = field(obj, key, where);
    if (!v.is_string()) {
      fail(std::string("field '") + key + "' in " + where + " must be a \"p/q\" string");
    }
    try {
      return parse_rational(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  std::vector<std::string> string_list(const json& arr, const char* where) const {
    std::vector<std::string> out;
    for (const auto& v : arr) {
      if (!v.is_string()) fail(std::string("entries of ") + where + " must be strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  void expect_kind(const json& doc, const char* kind) const {
    const auto k = string_field(doc, "kind", "document");
    if (k != kind) fail(std::string("expected kind \"") + kind + "\", found \"" + k + "\"");
  }

 private:
  std::string_view source_;
};

Hmm hmm_from_json(const json& doc, std::string_view source) {
  Reader rd(source);
  rd.expect_kind(doc, "hmm");
  Alphabet alphabet(rd.string_list(rd.array_field(doc, "observations", "document"), "observations"));
  HmmBuilder builder(std::move(alphabet));
  try {
    for (const auto& st : rd.array_field(doc, "states", "document")) {
      builder.add_state(rd.string_field(st, "name", "state"), rd.string_field(st, "obs", "state"),
                        rd.rational_field(st, "risk", "state"));
    }
    builder.set_initial(rd.string_field(doc, "initial", "document"));
    for (const auto& tr : rd.array_field(doc, "transitions", "document")) {
      builder.add_transition(rd.string_field(tr, "from", "transition"), rd.string_field(tr, "to", "transition"),
                             rd.rational_field(tr, "prob", "transition"));
    }
    return std::move(builder).build();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
}

Dfa dfa_from_json(const json& doc, std::string_view source) {
  Reader rd(source);
  rd.expect_kind(doc, "dfa");
  Alphabet alphabet(rd.string_list(rd.array_field(doc, "alphabet", "document"), "alphabet"));
  DfaBuilder builder(std::move(alphabet));
  try {
    for (const auto& name : rd.string_list(rd.array_field(doc, "states", "document"), "states")) {
      builder.add_state(name);
    }
    builder.set_initial(rd.string_field(doc, "initial", "document"));
    for (const auto& name : rd.string_list(rd.array_field(doc, "accepting", "document"), "accepting")) {
      builder.set_accepting(name);
    }
    for (const auto& tr : rd.array_field(doc, "transitions", "document")) {
      builder.add_transition(rd.string_field(tr, "from", "transition"), rd.string_field(tr, "on", "transition"),
                             rd.string_field(tr, "to", "transition"));
    }
    return std::move(builder).build();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

Hmm parse_hmm(std::string_view text, std::string_view source) {
  return hmm_from_json(parse_document(text, source), source);
}

Dfa parse_dfa(std::string_view text, std::string_view source) {
  return dfa_from_json(parse_document(text, source), source);
}

Model parse_model(std::string_view text, std::string_view source) {
  const json doc = parse_document(text, source);
  Reader rd(source);
  const auto kind = rd.string_field(doc, "kind", "document");
  if (kind == "hmm") return hmm_from_json(doc, source);
  if (kind == "dfa") return dfa_from_json(doc, source);
  rd.fail("unknown model kind \"" + kind + "\"");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write file");
  out << contents;
}

Model load_model(const std::filesystem::path& path) { return parse_model(read_file(path), path.string()); }
Hmm load_hmm(const std::filesystem::path& path) { return parse_hmm(read_file(path), path.string()); }
Dfa load_dfa(const std::filesystem::path& path) { return parse_dfa(read_file(path), path.string()); }

std::string to_json(const Hmm& model) {
  ordered_json doc;
  doc["kind"] = "hmm";
  doc["observations"] = model.observations().names();
  ordered_json states = ordered_json::array();
  for (StateId s = 0; s < model.size(); ++s) {
    ordered_json st;
    st["name"] = model.name(s);
    st["obs"] = model.observations().name(model.obs(s));
    st["risk"] = to_string(model.risk(s));
    states.push_back(std::move(st));
  }
  doc["states"] = std::move(states);
  doc["initial"] = model.name(model.initial());
  ordered_json transitions = ordered_json::array();
  for (StateId s = 0; s < model.size(); ++s) {
    for (const auto& t : model.successors(s)) {
      ordered_json tr;
      tr["from"] = model.name(s);
      tr["to"] = model.name(t.to);
      tr["prob"] = to_string(t.prob);
      transitions.push_back(std::move(tr));
    }
  }
  doc["transitions"] = std::move(transitions);
  return doc.dump(2) + "\n";
}

std::string to_json(const Dfa& monitor) {
  ordered_json doc;
  doc["kind"] = "dfa";
  doc["alphabet"] = monitor.alphabet().names();
  ordered_json states = ordered_json::array();
  ordered_json accepting = ordered_json::array();
  for (StateId q = 0; q < monitor.size(); ++q) {
    states.push_back(monitor.name(q));
    if (monitor.accepting(q)) accepting.push_back(monitor.name(q));
  }
  doc["states"] = std::move(states);
  doc["initial"] = monitor.name(monitor.initial());
  doc["accepting"] = std::move(accepting);
  ordered_json transitions = ordered_json::array();
  for (StateId q = 0; q < monitor.size(); ++q) {
    for (Symbol a = 0; a < monitor.alphabet().size(); ++a) {
      if (monitor.next(q, a) == kNoState) continue;
      ordered_json tr;
      tr["from"] = monitor.name(q);
      tr["on"] = monitor.alphabet().name(a);
      tr["to"] = monitor.name(monitor.next(q, a));
      transitions.push_back(std::move(tr));
    }
  }
  doc["transitions"] = std::move(transitions);
  return doc.dump(2) + "\n";
}

std::string to_dot(const Hmm& model) {
  std::ostringstream out;
  out << "digraph hmm {\n  rankdir=LR;\n  __start [shape=point];\n";
  for (StateId s = 0; s < model.size(); ++s) {
    out << "  s" << s << " [label=\"" << dot_escape(model.name(s)) << "\\n"
        << dot_escape(model.observations().name(model.obs(s)));
    if (model.risk(s) != 0) out << "\\nr=" << to_string(model.risk(s));
    out << "\"];\n";
  }
  out << "  __start -> s" << model.initial() << ";\n";
  for (StateId s = 0; s < model.size(); ++s) {
    for (const auto& t : model.successors(s)) {
      out << "  s" << s << " -> s" << t.to << " [label=\"" << to_string(t.prob) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string to_dot(const Dfa& monitor) {
  std::ostringstream out;
  out << "digraph dfa {\n  rankdir=LR;\n  __start [shape=point];\n";
  for (StateId q = 0; q < monitor.size(); ++q) {
    out << "  q" << q << " [label=\"" << dot_escape(monitor.name(q)) << "\", shape="
        << (monitor.accepting(q) ? "doublecircle" : "circle") << "];\n";
  }
  out << "  __start -> q" << monitor.initial() << ";\n";
  for (StateId q = 0; q < monitor.size(); ++q) {
    for (Symbol a = 0; a < monitor.alphabet().size(); ++a) {
      if (monitor.next(q, a) == kNoState) continue;
      out << "  q" << q << " -> q" << monitor.next(q, a) << " [label=\""
          << dot_escape(monitor.alphabet().name(a)) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace hmmon
