#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "respars/graph.hpp"
#include "respars/linalg.hpp"
#include "respars/train.hpp"

// Text formats shared by the CLI and the test suites. Matrices: "rows cols"
// header then whitespace-separated rows. Labels: one integer per line.
// Masks: one of train/val/test/none per line. Writes are atomic
// (temporary file + rename) so interrupted runs never leave partial data.

namespace respars {

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("atomic_write: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_file: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string format_matrix(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  char buf[40];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out += buf;
      out += (j + 1 == m.cols()) ? '\n' : ' ';
    }
  }
  return out;
}

inline Matrix parse_matrix(const std::string& text) {
  std::istringstream in(text);
  int rows, cols;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0)
    throw std::runtime_error("parse_matrix: bad header");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!(in >> m(i, j))) throw std::runtime_error("parse_matrix: truncated data");
  return m;
}

inline Matrix read_matrix(const std::filesystem::path& path) { return parse_matrix(read_file(path)); }

inline std::string format_labels(const std::vector<int>& labels) {
  std::string out;
  for (int l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  return out;
}

inline std::vector<int> read_labels(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<int> labels;
  int v;
  while (in >> v) labels.push_back(v);
  return labels;
}

inline std::string format_masks(const NodeMasks& masks) {
  std::string out;
  for (std::size_t i = 0; i < masks.train.size(); ++i) {
    if (masks.train[i])
      out += "train\n";
    else if (masks.val[i])
      out += "val\n";
    else if (masks.test[i])
      out += "test\n";
    else
      out += "none\n";
  }
  return out;
}

inline NodeMasks read_masks(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  NodeMasks masks;
  std::string word;
  while (in >> word) {
    masks.train.push_back(word == "train");
    masks.val.push_back(word == "val");
    masks.test.push_back(word == "test");
    if (word != "train" && word != "val" && word != "test" && word != "none")
      throw std::runtime_error("read_masks: unknown mask tag '" + word + "'");
  }
  return masks;
}

inline Graph read_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_graph: cannot open " + path.string());
  return parse_edge_list(in);
}

}  // namespace respars
