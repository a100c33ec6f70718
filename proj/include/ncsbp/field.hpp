#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ncsbp/geometry.hpp"

namespace ncsbp {

/// Per-element tensor-product nodal data, node-major with `width` components per node.
class SolutionField {
 public:
  SolutionField() = default;
  SolutionField(std::span<const int> degrees, int width);

  static SolutionField for_mesh(const MeshTopology& mesh, int width);

  int width() const { return width_; }
  std::size_t element_count() const { return degrees_.size(); }
  int degree(std::size_t e) const { return degrees_[e]; }
  std::size_t node_count(std::size_t e) const;
  std::size_t offset(std::size_t e) const { return offsets_[e]; }

  std::span<double> element(std::size_t e);
  std::span<const double> element(std::size_t e) const;

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }
  std::size_t size() const { return data_.size(); }

  void set_zero();
  bool same_layout(const SolutionField& other) const;

 private:
  int width_ = 1;
  std::vector<int> degrees_;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

/// Samples fn(x, out) at every node; out has `width` entries.
void fill_field(SolutionField& field, std::span<const ElementGeometry> geom,
                const std::function<void(const Vec3&, std::span<double>)>& fn);

}  // namespace ncsbp
