#include "esma/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "esma/digest.hpp"
#include "esma/error.hpp"
#include "esma/rng.hpp"
#include "esma/text.hpp"

namespace esma {

std::string_view to_string(MetaAnswer m) {
  switch (m) {
    case MetaAnswer::yes: return "yes";
    case MetaAnswer::no: return "no";
    case MetaAnswer::unparseable: return "unparseable";
  }
  return "unparseable";
}

MetaAnswer meta_answer_from_string(std::string_view s) {
  if (s == "yes") return MetaAnswer::yes;
  if (s == "no") return MetaAnswer::no;
  if (s == "unparseable") return MetaAnswer::unparseable;
  throw Error(ErrorKind::data, "unknown meta answer '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const EvalRecord& r) {
  j = nlohmann::json{{"id", r.item_id},
                     {"correct", r.correct},
                     {"meta", to_string(r.meta)},
                     {"aligned", r.parsed() ? nlohmann::json(r.outcome().aligned) : nlohmann::json()},
                     {"confidence", r.confidence ? nlohmann::json(*r.confidence) : nlohmann::json()}};
  if (r.idk) {
    j["idk_abstained"] = r.idk->abstained;
    j["idk_correct"] = r.idk->correct;
  } else {
    j["idk_abstained"] = nullptr;
    j["idk_correct"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, EvalRecord& r) {
  r.item_id = j.at("id").get<std::string>();
  r.correct = j.at("correct").get<bool>();
  r.meta = meta_answer_from_string(j.at("meta").get<std::string>());
  r.confidence.reset();
  if (j.contains("confidence") && !j["confidence"].is_null()) {
    r.confidence = j["confidence"].get<double>();
  }
  const bool has_abstained = j.contains("idk_abstained") && !j["idk_abstained"].is_null();
  const bool has_correct = j.contains("idk_correct") && !j["idk_correct"].is_null();
  if (has_abstained != has_correct) {
    throw Error(ErrorKind::data, "record " + r.item_id + ": idk fields must be both present or both absent");
  }
  r.idk.reset();
  if (has_abstained) {
    r.idk = IdkOutcome{j["idk_abstained"].get<bool>(), j["idk_correct"].get<bool>()};
  }
}

namespace {

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

QaItem parse_item(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::data, line_error(line, std::string("malformed JSON: ") + e.what()));
  }
  if (!j.is_object()) throw Error(ErrorKind::data, line_error(line, "expected a JSON object"));

  QaItem item;
  auto require_string = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorKind::data, line_error(line, std::string("missing or non-string '") + key + "'"));
    }
    return it->get<std::string>();
  };
  item.id = require_string("id");
  item.question = require_string("question");
  if (item.id.empty()) throw Error(ErrorKind::data, line_error(line, "empty id"));

  auto answers = j.find("answers");
  if (answers == j.end() || !answers->is_array()) {
    throw Error(ErrorKind::data, line_error(line, "missing or non-array 'answers'"));
  }
  if (answers->empty()) throw Error(ErrorKind::data, line_error(line, "empty answers for id " + item.id));
  for (const auto& a : *answers) {
    if (!a.is_string()) throw Error(ErrorKind::data, line_error(line, "non-string answer alias"));
    auto s = a.get<std::string>();
    if (normalize_answer(s).empty()) {
      throw Error(ErrorKind::data, line_error(line, "alias is empty after normalization for id " + item.id));
    }
    item.answers.push_back(std::move(s));
  }

  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "id" && it.key() != "question" && it.key() != "answers") {
      item.extra[it.key()] = it.value();
    }
  }
  return item;
}

}  // namespace

Dataset parse_dataset(std::string_view bytes, std::string source) {
  Dataset d;
  d.source_path = std::move(source);
  d.content_hash = sha256_hex(bytes);

  std::unordered_map<std::string, std::size_t> first_line;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    std::string line(bytes.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    QaItem item = parse_item(line, line_no);
    auto [it, inserted] = first_line.emplace(item.id, line_no);
    if (!inserted) {
      throw Error(ErrorKind::data, "duplicate id '" + item.id + "' on lines " + std::to_string(it->second) +
                                       " and " + std::to_string(line_no));
    }
    d.items.push_back(std::move(item));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), path.string());
}

std::string serialize_dataset(const Dataset& d) {
  std::string out;
  for (const auto& item : d.items) {
    nlohmann::json j = item.extra;
    j["id"] = item.id;
    j["question"] = item.question;
    j["answers"] = item.answers;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset make_dataset(std::vector<QaItem> items, std::string source) {
  Dataset d;
  d.items = std::move(items);
  d.source_path = std::move(source);
  d.content_hash = sha256_hex(serialize_dataset(d));
  return d;
}

DatasetSplit split_dataset(const Dataset& d, double eval_fraction, std::uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw Error(ErrorKind::domain, "eval_fraction must lie in (0, 1)");
  }
  const std::size_t n = d.size();
  if (n < 2) throw Error(ErrorKind::data, "split_dataset needs at least 2 items");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine engine(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(engine)]);
  }

  auto n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(n) * eval_fraction));
  n_eval = std::clamp<std::size_t>(n_eval, 1, n - 1);

  std::vector<QaItem> eval_items, train_items;
  eval_items.reserve(n_eval);
  train_items.reserve(n - n_eval);
  for (std::size_t k = 0; k < n; ++k) {
    (k < n_eval ? eval_items : train_items).push_back(d.items[order[k]]);
  }
  return {make_dataset(std::move(train_items), d.source_path + "#train"),
          make_dataset(std::move(eval_items), d.source_path + "#eval")};
}

}  // namespace esma
