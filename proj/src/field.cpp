#include "ncsbp/field.hpp"

#include <algorithm>
#include <stdexcept>

namespace ncsbp {

SolutionField::SolutionField(std::span<const int> degrees, int width)
    : width_(width), degrees_(degrees.begin(), degrees.end()) {
  if (width < 1) {
    throw std::invalid_argument("field width must be positive");
  }
  offsets_.resize(degrees_.size());
  std::size_t total = 0;
  for (std::size_t e = 0; e < degrees_.size(); ++e) {
    offsets_[e] = total;
    total += node_count(e) * static_cast<std::size_t>(width_);
  }
  data_.assign(total, 0.0);
}

SolutionField SolutionField::for_mesh(const MeshTopology& mesh, int width) {
  std::vector<int> degrees;
  degrees.reserve(mesh.elements.size());
  for (const auto& el : mesh.elements) {
    degrees.push_back(el.degree);
  }
  return SolutionField(degrees, width);
}

std::size_t SolutionField::node_count(std::size_t e) const {
  const auto n = static_cast<std::size_t>(degrees_[e] + 1);
  return n * n * n;
}

std::span<double> SolutionField::element(std::size_t e) {
  return {data_.data() + offsets_[e], node_count(e) * static_cast<std::size_t>(width_)};
}

std::span<const double> SolutionField::element(std::size_t e) const {
  return {data_.data() + offsets_[e], node_count(e) * static_cast<std::size_t>(width_)};
}

void SolutionField::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool SolutionField::same_layout(const SolutionField& other) const {
  return width_ == other.width_ && degrees_ == other.degrees_;
}

void fill_field(SolutionField& field, std::span<const ElementGeometry> geom,
                const std::function<void(const Vec3&, std::span<double>)>& fn) {
  if (geom.size() != field.element_count()) {
    throw std::invalid_argument("geometry and field element counts differ");
  }
  const auto w = static_cast<std::size_t>(field.width());
  for (std::size_t e = 0; e < geom.size(); ++e) {
    auto data = field.element(e);
    for (std::size_t i = 0; i < geom[e].x.size(); ++i) {
      fn(geom[e].x[i], data.subspan(i * w, w));
    }
  }
}

}  // namespace ncsbp
