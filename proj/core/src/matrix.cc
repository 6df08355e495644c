#include "lenbias/matrix.h"

#include <fstream>

#include "json.hpp"
#include "lenbias/error.h"
#include "lenbias/feature_io.h"

namespace lenbias {

const char* to_string(Orientation o) {
  return o == Orientation::kT2V ? "T2V" : "V2T";
}

SimilarityMatrix SimilarityMatrix::transposed() const {
  SimilarityMatrix out;
  out.scores = scores.transpose();
  out.orientation =
      orientation == Orientation::kT2V ? Orientation::kV2T : Orientation::kT2V;
  return out;
}

void export_matrix(const RowMatrix& values,
                   const std::vector<std::string>& row_ids,
                   const std::vector<std::string>& col_ids,
                   const std::filesystem::path& fvb_path,
                   const std::filesystem::path& sidecar_path,
                   const std::string& kind) {
  if (static_cast<Eigen::Index>(row_ids.size()) != values.rows() ||
      static_cast<Eigen::Index>(col_ids.size()) != values.cols()) {
    throw InvalidArgument("export_matrix: id lists do not match matrix shape");
  }
  if (values.cols() == 0) throw InvalidArgument("export_matrix: no columns");
  std::vector<float> data(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      data[static_cast<std::size_t>(i * values.cols() + j)] =
          static_cast<float>(values(i, j));
    }
  }
  save_features(FeatureMatrix(values.rows(), values.cols(), std::move(data)),
                fvb_path);
  nlohmann::ordered_json side;
  side["kind"] = kind;
  side["rows"] = row_ids;
  side["cols"] = col_ids;
  std::ofstream out(sidecar_path, std::ios::trunc);
  if (!out) throw Error("cannot write " + sidecar_path.string());
  out << side.dump(2) << '\n';
}

}  // namespace lenbias
