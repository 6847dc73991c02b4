#pragma once

#include <span>
#include <utility>
#include <vector>

namespace fairot {

/// Discrete joint distribution of (Z, L, A) with A binary. Cell ids are
/// opaque integers; zero-mass cells may be listed and are ignored.
class DiscreteJoint {
 public:
  struct Cell {
    int z;
    int l;
    int a;  // 0 or 1
    double mass;
  };

  explicit DiscreteJoint(std::vector<Cell> cells);

  const std::vector<Cell>& cells() const { return cells_; }

  // Same joint with the sensitive labels 0 and 1 swapped.
  DiscreteJoint flipped() const;

 private:
  std::vector<Cell> cells_;
};

/// E[(P(A=1|Z,L) - P(A=1|L))_+] with plug-in conditionals.
double dcfr_closed_form(const DiscreteJoint& joint);

/// sup_h Q(h) evaluated literally over all 2^k indicator functions on the
/// distinct (z, l) cells; k is capped at 16.
double dcfr_sup_bruteforce(const DiscreteJoint& joint);

/// Both sides of the pointwise ratio identity at (z, l):
///   |P(z|A=1,l) - P(z|A=0,l)| / |P(A=1|z,l) - P(A=1|l)|
///     == P(z|l) / (P(A=0|l) * P(A=1|l)).
/// Throws when any conditional is undefined or a denominator vanishes.
std::pair<double, double> ratio_identity(const DiscreteJoint& joint, int z, int l);

/// Builds the joint from model outputs by equal-frequency binning into at
/// most `bins` Z cells (exact distinct values are kept when fewer).
DiscreteJoint joint_from_outputs(std::span<const double> outputs, std::span<const int> levels,
                                 std::span<const int> sensitive, int bins);

}  // namespace fairot
