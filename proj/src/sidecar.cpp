#include "proxtrace/sidecar.hpp"

#include <algorithm>

#include "proxtrace/error.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

void KvDocument::set(std::string key, std::string value) {
  if (key.empty() || key.find_first_of(" \t=\n#") != std::string::npos)
    throw DataError("invalid sidecar key '" + key + "'");
  if (value.find('\n') != std::string::npos) throw DataError("sidecar value for " + key + " spans lines");
  if (find(key)) throw DataError("duplicate sidecar key " + key);
  entries_.emplace_back(std::move(key), std::move(value));
}

void KvDocument::set_doubles(std::string key, const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += text::sig17(values[i]);
  }
  set(std::move(key), std::move(out));
}

std::optional<std::string_view> KvDocument::find(std::string_view key) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::string_view KvDocument::get(std::string_view key) const {
  auto v = find(key);
  if (!v) throw DataError("sidecar is missing key " + std::string(key));
  return *v;
}

double KvDocument::get_double(std::string_view key) const {
  auto v = text::to_double(get(key));
  if (!v) throw DataError("sidecar key " + std::string(key) + " is not a number");
  return *v;
}

long long KvDocument::get_int(std::string_view key) const {
  auto v = text::to_int(get(key));
  if (!v) throw DataError("sidecar key " + std::string(key) + " is not an integer");
  return *v;
}

std::vector<double> KvDocument::get_doubles(std::string_view key) const {
  std::vector<double> out;
  for (auto w : text::split_ws(get(key))) {
    auto v = text::to_double(w);
    if (!v) throw DataError("sidecar key " + std::string(key) + " holds a non-number");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> KvDocument::get_words(std::string_view key) const {
  std::vector<std::string> out;
  for (auto w : text::split_ws(get(key))) out.emplace_back(w);
  return out;
}

std::string KvDocument::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

KvDocument KvDocument::parse(std::string_view input) {
  KvDocument doc;
  auto lines = text::split(input, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto eq = line.find(" = ");
    std::size_t skip = 3;
    if (eq == std::string_view::npos) {
      // tolerate "key =" with an empty value
      if (line.ends_with(" =")) {
        eq = line.size() - 2;
        skip = 2;
      } else {
        throw ParseError(i + 1, "expected 'key = value'");
      }
    }
    try {
      doc.set(std::string(line.substr(0, eq)), std::string(line.substr(eq + skip)));
    } catch (const DataError& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  return doc;
}

}  // namespace proxtrace
