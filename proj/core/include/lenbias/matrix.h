#ifndef LENBIAS_MATRIX_H_
#define LENBIAS_MATRIX_H_

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lenbias {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Which side of retrieval the rows hold. T2V: rows are caption queries,
// columns are gallery videos. V2T is the transpose.
enum class Orientation { kT2V, kV2T };

const char* to_string(Orientation o);

struct SimilarityMatrix {
  RowMatrix scores;
  Orientation orientation = Orientation::kT2V;

  Eigen::Index n_queries() const { return scores.rows(); }
  Eigen::Index n_gallery() const { return scores.cols(); }

  SimilarityMatrix transposed() const;
};

// Writes `values` (down-cast to float32) as FVB1 plus a JSON sidecar listing
// the row and column ids in order.
void export_matrix(const RowMatrix& values,
                   const std::vector<std::string>& row_ids,
                   const std::vector<std::string>& col_ids,
                   const std::filesystem::path& fvb_path,
                   const std::filesystem::path& sidecar_path,
                   const std::string& kind);

}  // namespace lenbias

#endif  // LENBIAS_MATRIX_H_
