#include "url_lens/latentlab/projection.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace url_lens::latentlab {

Projection project_2d(const Points& codes) {
  if (codes.rows() < 3) throw std::invalid_argument("project_2d: need at least three codes");
  const auto n = codes.rows();
  const auto d = codes.cols();
  const Eigen::RowVectorXd mean = codes.colwise().mean();
  const Eigen::MatrixXd centred = codes.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Projection p;
  p.components = Points::Zero(2, d);
  p.total_variance = cov.trace();
  for (int c = 0; c < 2; ++c) {
    const Eigen::Index col = d - 1 - c;  // eigenvalues ascend
    if (col < 0) break;
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    p.components.row(c) = v.transpose();
    p.explained[c] = std::max(0.0, eig.eigenvalues()(col));
  }
  p.coords = centred * p.components.transpose();
  return p;
}

void write_projection_csv(const std::filesystem::path& path, const Points& coords, const std::vector<int>& labels,
                          const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "# config_hash=" << config_hash << "\nx,y,label\n";
  char buf[64];
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g", coords(i, 0), coords(i, 1));
    f << buf << ',' << (static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)] : -1) << '\n';
  }
}

ProjectionTable read_projection_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::array<double, 2>> xy;
  ProjectionTable t;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    xy.push_back({std::stod(a), std::stod(b)});
    t.labels.push_back(std::getline(ss, c, ',') && !c.empty() ? std::stoi(c) : -1);
  }
  t.coords.resize(static_cast<Eigen::Index>(xy.size()), 2);
  for (std::size_t i = 0; i < xy.size(); ++i) {
    t.coords(static_cast<Eigen::Index>(i), 0) = xy[i][0];
    t.coords(static_cast<Eigen::Index>(i), 1) = xy[i][1];
  }
  return t;
}

}  // namespace url_lens::latentlab
