#include "ratopt/sdpa_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <tuple>

#include "ratopt/error.hpp"
#include "ratopt/polynomial.hpp"

namespace ratopt {

namespace {

struct Token {
  std::string text;
  int line;
};

bool is_comment(std::string_view line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos != std::string_view::npos && (line[pos] == '"' || line[pos] == '*');
}

std::vector<std::string> split_tokens(std::string line) {
  for (char& c : line) {
    if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')' || c == '\r' || c == '\t') c = ' ';
  }
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

double to_double(const std::string& s, int line) {
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(ParseError::Kind::NonNumeric, line, 0, "non-numeric entry '" + s + "'");
  }
  return v;
}

long to_int(const std::string& s, int line, ParseError::Kind kind) {
  long v = 0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // Some writers emit integers as "2.0".
    double d = to_double(s, line);
    if (d != static_cast<double>(static_cast<long>(d))) {
      throw ParseError(kind, line, 0, "expected an integer, got '" + s + "'");
    }
    return static_cast<long>(d);
  }
  return v;
}

struct SdpaEntry {
  int mat, block, row, col;
  double value;
};

}  // namespace

std::string export_sdpa(const SDPProblem& problem) {
  problem.validate();
  std::vector<Block> blocks = problem.blocks;
  if (!problem.equalities.empty()) {
    const int rows = static_cast<int>(problem.equalities.size());
    BlockBuilder eq(2 * rows, true);
    for (int r = 0; r < rows; ++r) {
      const auto& row = problem.equalities[r];
      for (const auto& [v, c] : row.coeffs) {
        eq.add(v, 2 * r, 2 * r, c);
        eq.add(v, 2 * r + 1, 2 * r + 1, -c);
      }
      eq.add(-1, 2 * r, 2 * r, -row.rhs);
      eq.add(-1, 2 * r + 1, 2 * r + 1, row.rhs);
    }
    blocks.push_back(eq.build());
  }

  std::vector<SdpaEntry> entries;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int bn = static_cast<int>(b) + 1;
    for (const auto& e : blocks[b].constant) {
      entries.push_back({0, bn, e.row + 1, e.col + 1, -e.value});
    }
    for (const auto& t : blocks[b].terms) {
      for (const auto& e : t.entries) entries.push_back({t.var + 1, bn, e.row + 1, e.col + 1, e.value});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const SdpaEntry& a, const SdpaEntry& b) {
    return std::tie(a.mat, a.block, a.row, a.col) < std::tie(b.mat, b.block, b.row, b.col);
  });

  std::string out;
  out += std::to_string(problem.num_vars) + "\n";
  out += std::to_string(blocks.size()) + "\n";
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) out += ' ';
    out += std::to_string(blocks[b].diagonal ? -blocks[b].size : blocks[b].size);
  }
  out += "\n";
  for (std::size_t a = 0; a < problem.objective.size(); ++a) {
    if (a) out += ' ';
    out += format_double(problem.objective[a]);
  }
  out += "\n";
  for (const auto& e : entries) {
    out += std::to_string(e.mat) + ' ' + std::to_string(e.block) + ' ' + std::to_string(e.row) +
           ' ' + std::to_string(e.col) + ' ' + format_double(e.value) + '\n';
  }
  return out;
}

SDPProblem import_sdpa(std::string_view text) {
  std::vector<std::pair<int, std::vector<std::string>>> lines;
  {
    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++lineno;
      std::string_view line = text.substr(start, end - start);
      if (!is_comment(line)) {
        auto toks = split_tokens(std::string(line));
        if (!toks.empty()) lines.emplace_back(lineno, std::move(toks));
      }
      if (end == text.size()) break;
      start = end + 1;
    }
  }

  std::size_t li = 0;
  auto need_line = [&](const char* what) -> std::pair<int, std::vector<std::string>>& {
    if (li >= lines.size()) {
      throw ParseError(ParseError::Kind::Header, lines.empty() ? 1 : lines.back().first, 0,
                       std::string("missing ") + what);
    }
    return lines[li++];
  };

  SDPProblem p;
  if (lines.empty()) throw ParseError(ParseError::Kind::Header, 1, 0, "empty SDPA file");
  {
    auto& [ln, toks] = need_line("variable count");
    long m = to_int(toks[0], ln, ParseError::Kind::Header);
    if (m < 0) throw ParseError(ParseError::Kind::Header, ln, 0, "negative variable count");
    p.num_vars = static_cast<int>(m);
  }
  long nblocks = 0;
  {
    auto& [ln, toks] = need_line("block count");
    nblocks = to_int(toks[0], ln, ParseError::Kind::Header);
    if (nblocks < 0) throw ParseError(ParseError::Kind::Header, ln, 0, "negative block count");
  }
  std::vector<BlockBuilder> builders;
  std::vector<int> sizes;
  std::vector<bool> diagonal;
  if (nblocks > 0) {
    auto& [ln, toks] = need_line("block structure");
    if (static_cast<long>(toks.size()) < nblocks) {
      throw ParseError(ParseError::Kind::Header, ln, 0,
                       "block structure lists " + std::to_string(toks.size()) + " sizes, expected " +
                           std::to_string(nblocks));
    }
    for (long b = 0; b < nblocks; ++b) {
      long s = to_int(toks[b], ln, ParseError::Kind::Header);
      if (s == 0) throw ParseError(ParseError::Kind::Header, ln, 0, "zero block size");
      sizes.push_back(static_cast<int>(s < 0 ? -s : s));
      diagonal.push_back(s < 0);
      builders.emplace_back(sizes.back(), s < 0);
    }
  }
  p.objective.reserve(p.num_vars);
  while (static_cast<int>(p.objective.size()) < p.num_vars) {
    auto& [ln, toks] = need_line("objective vector");
    for (const auto& t : toks) {
      if (static_cast<int>(p.objective.size()) == p.num_vars) {
        throw ParseError(ParseError::Kind::Header, ln, 0, "too many objective values");
      }
      p.objective.push_back(to_double(t, ln));
    }
  }
  for (; li < lines.size(); ++li) {
    const auto& [ln, toks] = lines[li];
    if (toks.size() != 5) {
      throw ParseError(ParseError::Kind::Syntax, ln, 0, "entry lines need 5 fields");
    }
    long mat = to_int(toks[0], ln, ParseError::Kind::NonNumeric);
    long blk = to_int(toks[1], ln, ParseError::Kind::NonNumeric);
    long row = to_int(toks[2], ln, ParseError::Kind::NonNumeric);
    long col = to_int(toks[3], ln, ParseError::Kind::NonNumeric);
    double v = to_double(toks[4], ln);
    if (mat < 0 || mat > p.num_vars) {
      throw ParseError(ParseError::Kind::IndexOutOfRange, ln, 0,
                       "matrix index " + std::to_string(mat) + " out of range");
    }
    if (blk < 1 || blk > nblocks) {
      throw ParseError(ParseError::Kind::IndexOutOfRange, ln, 0,
                       "block index " + std::to_string(blk) + " out of range (have " +
                           std::to_string(nblocks) + " blocks)");
    }
    const int s = sizes[blk - 1];
    if (row < 1 || col < 1 || row > s || col > s) {
      throw ParseError(ParseError::Kind::IndexOutOfRange, ln, 0,
                       "entry (" + std::to_string(row) + "," + std::to_string(col) +
                           ") outside block " + std::to_string(blk));
    }
    if (diagonal[blk - 1] && row != col) {
      throw ParseError(ParseError::Kind::IndexOutOfRange, ln, 0,
                       "off-diagonal entry in diagonal block " + std::to_string(blk));
    }
    const int var = static_cast<int>(mat) - 1;
    builders[blk - 1].add(var, static_cast<int>(row) - 1, static_cast<int>(col) - 1,
                          var < 0 ? -v : v);
  }
  for (auto& b : builders) p.blocks.push_back(b.build());
  return p;
}

ExternalResult parse_sdpa_result(std::string_view text, int num_vars) {
  ExternalResult r;
  std::string s(text);
  auto obj = s.find("objValPrimal");
  if (obj == std::string::npos) {
    r.message = "objValPrimal not found";
    return r;
  }
  auto eq = s.find('=', obj);
  if (eq == std::string::npos) {
    r.message = "malformed objValPrimal line";
    return r;
  }
  std::istringstream os(s.substr(eq + 1));
  if (!(os >> r.objective)) {
    r.message = "cannot read objValPrimal";
    return r;
  }
  auto xv = s.find("xVec");
  if (xv == std::string::npos) {
    r.message = "xVec not found";
    return r;
  }
  auto open = s.find('{', xv);
  auto close = s.find('}', open == std::string::npos ? xv : open);
  if (open == std::string::npos || close == std::string::npos) {
    r.message = "malformed xVec";
    return r;
  }
  for (const auto& t : split_tokens(s.substr(open + 1, close - open - 1))) {
    try {
      r.y.push_back(to_double(t, 0));
    } catch (const ParseError&) {
      r.message = "non-numeric value in xVec";
      return r;
    }
  }
  if (static_cast<int>(r.y.size()) != num_vars) {
    r.message = "xVec has " + std::to_string(r.y.size()) + " entries, expected " +
                std::to_string(num_vars);
    return r;
  }
  r.ok = true;
  return r;
}

}  // namespace ratopt
