#pragma once

// Matrix elements <conj(e_l), Lambda e_m> of a Dirichlet-to-Neumann map in the
// basis e_l = e^{i l theta}/sqrt(2 pi), and their JSON file format.

#include "calderon/specfun.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

namespace calderon {

enum class DtNBlock {
  Positive,  ///< 1 <= l, m <= L
  Full,      ///< |l|, |m| <= L
};

class DtNMatrix {
 public:
  DtNMatrix() = default;
  DtNMatrix(int l_max, DtNBlock block, std::string provenance = "", std::optional<double> kappa = std::nullopt)
      : l_max_(l_max), block_(block), provenance_(std::move(provenance)), kappa_(kappa) {
    if (l_max < 1) throw std::invalid_argument("DtNMatrix: l_max must be >= 1");
    const int n = block == DtNBlock::Positive ? l_max : 2 * l_max + 1;
    entries_ = Eigen::MatrixXcd::Zero(n, n);
  }

  [[nodiscard]] int l_max() const { return l_max_; }
  [[nodiscard]] DtNBlock block() const { return block_; }
  [[nodiscard]] const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }
  [[nodiscard]] std::optional<double> kappa() const { return kappa_; }
  void set_kappa(std::optional<double> k) { kappa_ = k; }

  [[nodiscard]] bool stores(int l, int m) const {
    if (std::abs(l) > l_max_ || std::abs(m) > l_max_) return false;
    return block_ == DtNBlock::Full || (l >= 1 && m >= 1);
  }

  cplx& operator()(int l, int m) {
    if (!stores(l, m)) throw std::out_of_range("DtNMatrix: entry outside stored block");
    return entries_(offset(l), offset(m));
  }
  const cplx& operator()(int l, int m) const {
    if (!stores(l, m)) throw std::out_of_range("DtNMatrix: entry outside stored block");
    return entries_(offset(l), offset(m));
  }

  /// Entry lookup that also uses the structure of a real conductivity DtN map:
  /// rows and columns with index 0 vanish (constants are annihilated and the
  /// map is symmetric), and M[-l][-m] = conj(M[l][m]).
  [[nodiscard]] cplx at(int l, int m) const {
    if (stores(l, m)) return (*this)(l, m);
    if (std::abs(l) > l_max_ || std::abs(m) > l_max_) throw std::out_of_range("DtNMatrix::at: beyond l_max");
    if (l == 0 || m == 0) return 0.0;
    if (l < 0 && m < 0) return std::conj((*this)(-l, -m));
    throw std::out_of_range("DtNMatrix::at: mixed-sign entry requires the full block");
  }

  /// max |M[m][l] - conj(M[l][m])| over the stored block.
  [[nodiscard]] double max_hermitian_asymmetry() const {
    double worst = 0.0;
    for (int i = 0; i < entries_.rows(); ++i) {
      for (int j = 0; j < entries_.cols(); ++j) {
        worst = std::max(worst, std::abs(entries_(j, i) - std::conj(entries_(i, j))));
      }
    }
    return worst;
  }

  /// Positive-index block as an L x L matrix (row l-1, column m-1).
  [[nodiscard]] Eigen::MatrixXcd positive_block() const {
    if (block_ == DtNBlock::Positive) return entries_;
    return entries_.bottomRightCorner(l_max_, l_max_);
  }

  /// Restriction to 1 <= l, m <= new_l_max.
  [[nodiscard]] DtNMatrix truncated_positive(int new_l_max) const {
    if (new_l_max > l_max_) throw std::invalid_argument("DtNMatrix: cannot truncate to a larger l_max");
    DtNMatrix out(new_l_max, DtNBlock::Positive, provenance_, kappa_);
    for (int l = 1; l <= new_l_max; ++l)
      for (int m = 1; m <= new_l_max; ++m) out(l, m) = (*this)(l, m);
    return out;
  }

  [[nodiscard]] const Eigen::MatrixXcd& raw() const { return entries_; }
  Eigen::MatrixXcd& raw() { return entries_; }

  /// First index stored in the block (1 or -L).
  [[nodiscard]] int first_index() const { return block_ == DtNBlock::Positive ? 1 : -l_max_; }

 private:
  [[nodiscard]] int offset(int l) const { return block_ == DtNBlock::Positive ? l - 1 : l + l_max_; }

  int l_max_ = 0;
  DtNBlock block_ = DtNBlock::Positive;
  std::string provenance_;
  std::optional<double> kappa_;
  Eigen::MatrixXcd entries_;
};

// ---- JSON -----------------------------------------------------------------

inline nlohmann::json to_json(const DtNMatrix& m) {
  nlohmann::json j;
  j["l_max"] = m.l_max();
  j["kappa"] = m.kappa() ? nlohmann::json(*m.kappa()) : nlohmann::json(nullptr);
  j["provenance"] = m.provenance();
  auto entries = nlohmann::json::array();
  const int lo = m.first_index();
  for (int l = lo; l <= m.l_max(); ++l) {
    for (int k = lo; k <= m.l_max(); ++k) {
      const cplx v = m(l, k);
      entries.push_back({l, k, v.real(), v.imag()});
    }
  }
  j["entries"] = std::move(entries);
  return j;
}

struct DtNReadReport {
  DtNMatrix matrix;
  double max_asymmetry = 0.0;
};

/// Parses and validates a DtN JSON document. The stored block must be
/// exhaustive; the Hermitian asymmetry is measured and returned.
inline DtNReadReport dtn_from_json(const nlohmann::json& j) {
  if (!j.contains("l_max") || !j.contains("entries")) {
    throw std::invalid_argument("DtN JSON: missing 'l_max' or 'entries'");
  }
  const int l_max = j.at("l_max").get<int>();
  bool any_nonpositive = false;
  for (const auto& e : j.at("entries")) {
    if (!e.is_array() || e.size() != 4) throw std::invalid_argument("DtN JSON: entries must be [l, m, re, im]");
    if (e[0].get<int>() < 1 || e[1].get<int>() < 1) any_nonpositive = true;
  }
  const DtNBlock block = any_nonpositive ? DtNBlock::Full : DtNBlock::Positive;
  std::optional<double> kappa;
  if (j.contains("kappa") && !j.at("kappa").is_null()) kappa = j.at("kappa").get<double>();
  DtNMatrix m(l_max, block, j.value("provenance", std::string("file")), kappa);
  const int side = block == DtNBlock::Positive ? l_max : 2 * l_max + 1;
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(side, side);
  for (const auto& e : j.at("entries")) {
    const int l = e[0].get<int>(), k = e[1].get<int>();
    if (!m.stores(l, k)) throw std::invalid_argument("DtN JSON: entry index beyond l_max");
    m(l, k) = cplx(e[2].get<double>(), e[3].get<double>());
    seen(l - m.first_index(), k - m.first_index()) += 1;
  }
  if ((seen.array() != 1).any()) throw std::invalid_argument("DtN JSON: entries are not exhaustive over the block");
  return {m, m.max_hermitian_asymmetry()};
}

inline void save_dtn(const std::string& path, const DtNMatrix& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << to_json(m).dump(1) << '\n';
}

inline DtNReadReport load_dtn(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return dtn_from_json(nlohmann::json::parse(is));
}

}  // namespace calderon
