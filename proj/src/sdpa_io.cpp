#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "agstab/sdp.hpp"

namespace agstab {

SdpaParseError::SdpaParseError(int ln, int col, const std::string& msg)
    : std::runtime_error("sdpa parse error at line " + std::to_string(ln) +
                         ", column " + std::to_string(col) + ": " + msg),
      line(ln),
      column(col) {}

namespace {

constexpr const char* kFreeTag = "FREEVARS";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  void skip_separators() {
    while (!eof()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == ',' ||
          c == '(' || c == ')' || c == '{' || c == '}') {
        advance();
      } else {
        break;
      }
    }
  }
  double number(const char* what) {
    skip_separators();
    if (eof()) throw SdpaParseError(line, col, std::string("expected ") + what);
    int l = line, c = col;
    std::size_t start = pos;
    while (!eof()) {
      char ch = peek();
      if ((ch >= '0' && ch <= '9') || ch == '+' || ch == '-' || ch == '.' ||
          ch == 'e' || ch == 'E') {
        advance();
      } else {
        break;
      }
    }
    if (pos == start)
      throw SdpaParseError(l, c, std::string("expected ") + what);
    std::string tok = text.substr(start, pos - start);
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw SdpaParseError(l, c, "bad number '" + tok + "'");
    }
  }
  long integer(const char* what) {
    double v = number(what);
    long iv = static_cast<long>(v);
    if (static_cast<double>(iv) != v)
      throw SdpaParseError(line, col, std::string(what) + " must be an integer");
    return iv;
  }
};

}  // namespace

std::string write_sdpa(const SdpProblem& p) {
  p.validate();
  std::ostringstream out;
  out << "*sdpa sparse format, written by agstab\n";
  if (p.num_free > 0) out << "*" << kFreeTag << " " << p.num_free << "\n";
  for (const auto& c : p.comments) out << "*" << c << "\n";

  const int m = static_cast<int>(p.constraints.size());
  const int psd_blocks = static_cast<int>(p.block_sizes.size());
  const int nblock = psd_blocks + (p.num_free > 0 ? 1 : 0);
  out << m << "\n" << nblock << "\n";
  for (int k = 0; k < psd_blocks; ++k)
    out << p.block_sizes[k] << (k + 1 < nblock ? " " : "");
  if (p.num_free > 0) out << (psd_blocks > 0 ? "" : "") << -2 * p.num_free;
  out << "\n";
  for (int i = 0; i < m; ++i)
    out << fmt(p.constraints[i].rhs) << (i + 1 < m ? " " : "");
  out << "\n";

  auto emit_mat = [&](int matno, const std::vector<SdpProblem::MatEntry>& mat,
                      const std::vector<std::pair<int, double>>& free_coeffs) {
    for (const auto& e : mat)
      out << matno << " " << e.block + 1 << " " << e.row + 1 << " "
          << e.col + 1 << " " << fmt(e.value) << "\n";
    for (const auto& [j, v] : free_coeffs) {
      // theta_j = u_j - v_j in the trailing split diagonal block
      out << matno << " " << psd_blocks + 1 << " " << j + 1 << " " << j + 1
          << " " << fmt(v) << "\n";
      out << matno << " " << psd_blocks + 1 << " " << p.num_free + j + 1 << " "
          << p.num_free + j + 1 << " " << fmt(-v) << "\n";
    }
  };
  emit_mat(0, p.obj_mat, p.obj_free);
  for (int i = 0; i < m; ++i)
    emit_mat(i + 1, p.constraints[i].mat, p.constraints[i].free_coeffs);
  return out.str();
}

SdpProblem read_sdpa(const std::string& text) {
  SdpProblem p;
  Cursor cur{text};
  int free_vars = 0;

  // Comment block: lines starting with * or ".
  while (true) {
    // peek at start of line
    std::size_t save = cur.pos;
    int sl = cur.line, sc = cur.col;
    while (!cur.eof() && (cur.peek() == ' ' || cur.peek() == '\t' ||
                          cur.peek() == '\r' || cur.peek() == '\n'))
      cur.advance();
    if (cur.eof()) throw SdpaParseError(cur.line, cur.col, "empty file");
    char c = cur.peek();
    if (c != '*' && c != '"') {
      cur.pos = save;
      cur.line = sl;
      cur.col = sc;
      break;
    }
    cur.advance();
    std::string comment;
    while (!cur.eof() && cur.peek() != '\n') {
      comment += cur.peek();
      cur.advance();
    }
    if (comment.rfind(kFreeTag, 0) == 0) {
      free_vars = std::atoi(comment.c_str() + std::string(kFreeTag).size());
    } else if (comment.rfind("sdpa sparse format", 0) != 0) {
      p.comments.push_back(comment);
    }
  }

  long m = cur.integer("constraint count");
  if (m < 0 || m > 1000000)
    throw SdpaParseError(cur.line, cur.col, "constraint count out of range");
  long nblock = cur.integer("block count");
  if (nblock < 1 || nblock > 100000)
    throw SdpaParseError(cur.line, cur.col, "block count out of range");
  std::vector<long> bs(nblock);
  for (long k = 0; k < nblock; ++k) {
    bs[k] = cur.integer("block size");
    if (bs[k] < -100000 || bs[k] > 100000)
      throw SdpaParseError(cur.line, cur.col, "block size out of range");
  }

  int split_block = -1;  // index of the tagged free-variable block
  for (long k = 0; k < nblock; ++k) {
    bool last = k + 1 == nblock;
    if (free_vars > 0 && last) {
      if (bs[k] != -2 * free_vars)
        throw SdpaParseError(cur.line, cur.col,
                             "free-variable block size does not match tag");
      split_block = static_cast<int>(k);
      p.num_free = free_vars;
    } else if (bs[k] == 0) {
      throw SdpaParseError(cur.line, cur.col, "zero block size");
    } else {
      // Diagonal (negative) foreign blocks import as PSD blocks of the same
      // size; only diagonal positions carry data so feasibility matches.
      p.block_sizes.push_back(static_cast<int>(std::labs(bs[k])));
    }
  }

  p.constraints.resize(m);
  for (long i = 0; i < m; ++i) p.constraints[i].rhs = cur.number("rhs value");

  cur.skip_separators();
  while (!cur.eof()) {
    long matno = cur.integer("matrix number");
    long blk = cur.integer("block number");
    long r = cur.integer("row");
    long c = cur.integer("column");
    double v = cur.number("value");
    if (matno < 0 || matno > m)
      throw SdpaParseError(cur.line, cur.col, "matrix number out of range");
    if (blk < 1 || blk > nblock)
      throw SdpaParseError(cur.line, cur.col, "block number out of range");
    if (r > c) std::swap(r, c);
    if (split_block >= 0 && blk - 1 == split_block) {
      if (r != c)
        throw SdpaParseError(cur.line, cur.col,
                             "off-diagonal entry in free-variable block");
      if (r <= free_vars) {
        int j = static_cast<int>(r - 1);
        if (matno == 0)
          p.obj_free.emplace_back(j, v);
        else
          p.constraints[matno - 1].free_coeffs.emplace_back(j, v);
      }
      // Mirror entries (the -v half of the split) are implied; skip.
    } else {
      int adj = static_cast<int>(blk - 1);
      if (split_block >= 0 && blk - 1 > split_block) --adj;
      SdpProblem::MatEntry e{adj, static_cast<int>(r - 1),
                             static_cast<int>(c - 1), v};
      if (e.row < 0 || e.col >= p.block_sizes[e.block])
        throw SdpaParseError(cur.line, cur.col, "entry index out of range");
      if (matno == 0)
        p.obj_mat.push_back(e);
      else
        p.constraints[matno - 1].mat.push_back(e);
    }
    cur.skip_separators();
  }
  p.validate();
  return p;
}

namespace {

using Entry = SdpProblem::MatEntry;

std::vector<Entry> canon(std::vector<Entry> v) {
  std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.block, a.row, a.col) < std::tie(b.block, b.row, b.col);
  });
  std::vector<Entry> out;
  for (const auto& e : v) {
    if (!out.empty() && out.back().block == e.block && out.back().row == e.row &&
        out.back().col == e.col)
      out.back().value += e.value;
    else
      out.push_back(e);
  }
  std::erase_if(out, [](const Entry& e) { return e.value == 0.0; });
  return out;
}

std::vector<std::pair<int, double>> canon_free(
    std::vector<std::pair<int, double>> v) {
  std::sort(v.begin(), v.end());
  std::vector<std::pair<int, double>> out;
  for (const auto& e : v) {
    if (!out.empty() && out.back().first == e.first)
      out.back().second += e.second;
    else
      out.push_back(e);
  }
  std::erase_if(out, [](const auto& e) { return e.second == 0.0; });
  return out;
}

bool entries_equal(const std::vector<Entry>& a, const std::vector<Entry>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].block != b[i].block || a[i].row != b[i].row ||
        a[i].col != b[i].col || a[i].value != b[i].value)
      return false;
  return true;
}

}  // namespace

bool sdp_structurally_equal(const SdpProblem& a, const SdpProblem& b) {
  if (a.block_sizes != b.block_sizes || a.num_free != b.num_free) return false;
  if (a.constraints.size() != b.constraints.size()) return false;
  if (!entries_equal(canon(a.obj_mat), canon(b.obj_mat))) return false;
  if (canon_free(a.obj_free) != canon_free(b.obj_free)) return false;
  for (std::size_t i = 0; i < a.constraints.size(); ++i) {
    if (a.constraints[i].rhs != b.constraints[i].rhs) return false;
    if (!entries_equal(canon(a.constraints[i].mat), canon(b.constraints[i].mat)))
      return false;
    if (canon_free(a.constraints[i].free_coeffs) !=
        canon_free(b.constraints[i].free_coeffs))
      return false;
  }
  return true;
}

}  // namespace agstab
