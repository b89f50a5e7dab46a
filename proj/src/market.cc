// Copyright 2026 The tumatch Authors
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

#include "tumatch/market.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace tumatch {
namespace {

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> SplitCsv(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(Trim(line.substr(start)));
      break;
    }
    out.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string Where(const std::string& path, size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

int64_t ParseTimestamp(const std::string& token, const std::string& where) {
  int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw DataError(where + "bad timestamp '" + token + "'");
  }
  if (value < 0) throw DataError(where + "negative timestamp " + token);
  return value;
}

Side ParseSide(const std::string& token, const std::string& where) {
  if (token == "X" || token == "x") return Side::kX;
  if (token == "Y" || token == "y") return Side::kY;
  throw DataError(where + "side must be X or Y, got '" + token + "'");
}

struct RawRow {
  FeedbackEvent event;
  std::optional<Side> sender_side;
  size_t line;
};

std::vector<RawRow> ReadCsvRows(const std::string& path, std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  size_t line_no = 0;
  int col_sender = -1, col_receiver = -1, col_action = -1, col_time = -1,
      col_side = -1;
  size_t columns = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsv(line);
    if (!have_header) {
      for (size_t i = 0; i < fields.size(); ++i) {
        const auto& f = fields[i];
        const int idx = static_cast<int>(i);
        if (f == "sender") col_sender = idx;
        else if (f == "receiver") col_receiver = idx;
        else if (f == "action") col_action = idx;
        else if (f == "timestamp") col_time = idx;
        else if (f == "sender_side") col_side = idx;
      }
      if (col_sender < 0 || col_receiver < 0 || col_action < 0 || col_time < 0) {
        throw DataError(Where(path, line_no) +
                        "header must name sender,receiver,action,timestamp");
      }
      columns = fields.size();
      have_header = true;
      continue;
    }
    const std::string where = Where(path, line_no);
    if (fields.size() != columns) {
      throw DataError(where + "expected " + std::to_string(columns) +
                      " fields, got " + std::to_string(fields.size()));
    }
    RawRow row;
    row.line = line_no;
    row.event.sender = fields[col_sender];
    row.event.receiver = fields[col_receiver];
    if (row.event.sender.empty() || row.event.receiver.empty()) {
      throw DataError(where + "empty user id");
    }
    try {
      row.event.action = ParseAction(fields[col_action]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    row.event.timestamp = ParseTimestamp(fields[col_time], where);
    if (col_side >= 0) row.sender_side = ParseSide(fields[col_side], where);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawRow> ReadJsonlRows(const std::string& path, std::istream& in) {
  using nlohmann::json;
  std::vector<RawRow> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const std::string where = Where(path, line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + "invalid JSON: " + e.what());
    }
    if (!obj.is_object()) throw DataError(where + "expected a JSON object");
    RawRow row;
    row.line = line_no;
    try {
      row.event.sender = obj.at("sender").get<std::string>();
      row.event.receiver = obj.at("receiver").get<std::string>();
      const auto action = obj.at("action").get<std::string>();
      row.event.action = ParseAction(action);
      const auto& ts = obj.at("timestamp");
      if (!ts.is_number_integer()) throw DataError("timestamp must be an integer");
      row.event.timestamp = ts.get<int64_t>();
      if (obj.contains("sender_side")) {
        row.sender_side = ParseSide(obj["sender_side"].get<std::string>(), where);
      }
    } catch (const json::exception& e) {
      throw DataError(where + "missing or mistyped field: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    if (row.event.timestamp < 0) throw DataError(where + "negative timestamp");
    rows.push_back(std::move(row));
  }
  return rows;
}

struct Roster {
  std::vector<std::string> men;
  std::vector<std::string> women;
};

Roster ReadRoster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open roster " + path);
  Roster roster;
  std::string line;
  size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsv(line);
    const std::string where = Where(path, line_no);
    if (!have_header) {
      if (fields.size() != 2 || fields[0] != "user_id" || fields[1] != "side") {
        throw DataError(where + "roster header must be user_id,side");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 2) throw DataError(where + "expected 2 fields");
    if (fields[0].empty()) throw DataError(where + "empty user id");
    const Side side = ParseSide(fields[1], where);
    (side == Side::kX ? roster.men : roster.women).push_back(fields[0]);
  }
  return roster;
}

}  // namespace

const char* ActionName(Action action) {
  switch (action) {
    case Action::kLike: return "like";
    case Action::kNope: return "nope";
    case Action::kThank: return "thank";
    case Action::kSorry: return "sorry";
  }
  return "?";
}

Action ParseAction(std::string_view token) {
  if (token == "like") return Action::kLike;
  if (token == "nope") return Action::kNope;
  if (token == "thank") return Action::kThank;
  if (token == "sorry") return Action::kSorry;
  throw DataError("unknown action '" + std::string(token) + "'");
}

Market::Market(std::vector<std::string> men, std::vector<std::string> women,
               std::vector<FeedbackEvent> feedback)
    : men_(std::move(men)), women_(std::move(women)), feedback_(std::move(feedback)) {
  if (men_.empty() || women_.empty()) {
    throw DataError("market needs at least one user on each side");
  }
  index_.reserve(men_.size() + women_.size());
  for (Side side : {Side::kX, Side::kY}) {
    const auto& list = ids(side);
    for (size_t i = 0; i < list.size(); ++i) {
      const bool inserted =
          index_.emplace(list[i], UserRef{side, static_cast<uint32_t>(i)}).second;
      if (!inserted) throw DataError("duplicate user id '" + list[i] + "'");
    }
  }
  for (size_t i = 0; i < feedback_.size(); ++i) {
    const auto& e = feedback_[i];
    const UserRef s = Lookup(e.sender);
    const UserRef r = Lookup(e.receiver);
    if (s.side == r.side) {
      throw DataError("event " + std::to_string(i) + ": sender '" + e.sender +
                      "' and receiver '" + e.receiver + "' are on the same side");
    }
    if (e.timestamp < 0) {
      throw DataError("event " + std::to_string(i) + ": negative timestamp");
    }
  }
}

std::optional<UserRef> Market::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

UserRef Market::Lookup(std::string_view id) const {
  auto ref = Find(id);
  if (!ref) throw DataError("unknown user id '" + std::string(id) + "'");
  return *ref;
}

Market LoadFeedback(const std::string& path, FeedbackFormat format,
                    const std::string& roster_path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feedback file " + path);
  std::vector<RawRow> rows = format == FeedbackFormat::kCsv
                                 ? ReadCsvRows(path, in)
                                 : ReadJsonlRows(path, in);

  std::vector<std::string> men, women;
  if (!roster_path.empty()) {
    Roster roster = ReadRoster(roster_path);
    men = std::move(roster.men);
    women = std::move(roster.women);
    std::unordered_map<std::string, Side> side_of;
    for (const auto& m : men) side_of.emplace(m, Side::kX);
    for (const auto& w : women) side_of.emplace(w, Side::kY);
    for (const auto& row : rows) {
      const std::string where = Where(path, row.line);
      auto s = side_of.find(row.event.sender);
      auto r = side_of.find(row.event.receiver);
      if (s == side_of.end()) {
        throw DataError(where + "sender '" + row.event.sender + "' not in roster");
      }
      if (r == side_of.end()) {
        throw DataError(where + "receiver '" + row.event.receiver + "' not in roster");
      }
      if (s->second == r->second) {
        throw DataError(where + "sender and receiver on the same side");
      }
      if (row.sender_side && *row.sender_side != s->second) {
        throw DataError(where + "sender_side disagrees with roster");
      }
    }
  } else {
    std::unordered_map<std::string, Side> side_of;
    auto assign = [&](const std::string& id, Side side, const std::string& where) {
      auto [it, inserted] = side_of.emplace(id, side);
      if (!inserted && it->second != side) {
        throw DataError(where + "user '" + id + "' appears on both sides");
      }
      if (inserted) (side == Side::kX ? men : women).push_back(id);
    };
    for (const auto& row : rows) {
      const std::string where = Where(path, row.line);
      if (!row.sender_side) {
        throw DataError(where + "no roster given and row has no sender_side");
      }
      if (row.event.sender == row.event.receiver) {
        throw DataError(where + "sender and receiver on the same side");
      }
      assign(row.event.sender, *row.sender_side, where);
      assign(row.event.receiver, Opposite(*row.sender_side), where);
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
    return a.event.timestamp < b.event.timestamp;
  });
  std::vector<FeedbackEvent> events;
  events.reserve(rows.size());
  for (auto& row : rows) events.push_back(std::move(row.event));
  return Market(std::move(men), std::move(women), std::move(events));
}

Market LoadMarket(const std::string& feedback_path, const std::string& roster_path) {
  const bool jsonl = feedback_path.size() >= 6 &&
                     feedback_path.compare(feedback_path.size() - 6, 6, ".jsonl") == 0;
  return LoadFeedback(feedback_path, jsonl ? FeedbackFormat::kJsonl : FeedbackFormat::kCsv,
                      roster_path);
}

Market LoadRoster(const std::string& roster_path) {
  Roster roster = ReadRoster(roster_path);
  return Market(std::move(roster.men), std::move(roster.women), {});
}

void SaveRoster(const Market& market, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "user_id,side\n";
  for (const auto& m : market.men()) out << m << ",X\n";
  for (const auto& w : market.women()) out << w << ",Y\n";
}

void SaveFeedbackCsv(const Market& market, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "sender,receiver,action,timestamp\n";
  for (const auto& e : market.feedback()) {
    out << e.sender << ',' << e.receiver << ',' << ActionName(e.action) << ','
        << e.timestamp << '\n';
  }
}

void ValidateScores(const ScoreMatrix& scores) {
  if (scores.p_xy.rows() != scores.p_yx.rows() ||
      scores.p_xy.cols() != scores.p_yx.cols()) {
    throw DataError("score matrices differ in shape");
  }
  for (const Matrix* m : {&scores.p_xy, &scores.p_yx}) {
    for (size_t x = 0; x < m->rows(); ++x) {
      for (size_t y = 0; y < m->cols(); ++y) {
        const double v = (*m)(x, y);
        if (!(v >= 0.0 && v <= 1.0)) {
          std::ostringstream msg;
          msg << "score (" << x << ", " << y << ") = " << v << " outside [0, 1]";
          throw DataError(msg.str());
        }
      }
    }
  }
}

}  // namespace tumatch
