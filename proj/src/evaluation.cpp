// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/evaluation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "artflow/image_io.hpp"
#include "artflow/rng.hpp"

namespace artflow {
namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(name) + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument(std::string(name) + " is not symmetric");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double l1_error(const StageImage& a, const StageImage& b) {
  if (!a.same_geometry(b)) throw std::invalid_argument("l1_error: geometry mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    s += std::abs(static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]));
  }
  return s / static_cast<double>(a.pixels.size()) / 2.0;
}

GaussianMoments fit_gaussian(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("fit_gaussian: need at least two samples");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d) throw std::invalid_argument("fit_gaussian: ragged rows");
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[i][j];
  }
  GaussianMoments m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  return m;
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("sqrtm_psd: eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& cov2) {
  require_symmetric(cov1, "cov1");
  require_symmetric(cov2, "cov2");
  if (mu1.size() != mu2.size() || cov1.rows() != mu1.size() || cov2.rows() != mu2.size()) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  const Eigen::MatrixXd s1 = sqrtm_psd(cov1);
  Eigen::MatrixXd inner = s1 * cov2 * s1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("frechet_distance: eigendecomposition failed");
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu1 - mu2).squaredNorm() + cov1.trace() + cov2.trace() - 2.0 * tr_sqrt;
  return std::max(d, 0.0);
}

double fid_score(std::span<const StageImage> set_a, std::span<const StageImage> set_b,
                 const FeatureExtractor<float>& features) {
  if (set_a.size() < 2 || set_b.size() < 2) throw std::invalid_argument("fid_score: each set needs at least two images");
  const GaussianMoments a = fit_gaussian(embed_images(features, set_a));
  const GaussianMoments b = fit_gaussian(embed_images(features, set_b));
  return frechet_distance(a.mean, a.cov, b.mean, b.cov);
}

template <typename T>
OptState z_optimization_baseline(const GenerationNet<T>& net, const StageImage& input_image,
                                 const StageImage& reference, const HyperParams& hyper,
                                 const FeatureExtractor<T>& features) {
  if (input_image.stage_index != net.stage_index() || reference.stage_index != net.stage_index() + 1) {
    throw stage_error("z_optimization_baseline: stage mismatch");
  }
  OptState state;
  state.stage_index = net.stage_index();
  const LatentCode z0 = encode_latent(net, reference);
  LatentObjective<T> objective(net, input_image, reference, hyper, features);
  DescentResult r = gradient_descent(objective, z0.values, hyper.alpha, hyper.T);
  state.latent = LatentCode{net.stage_index(), std::move(r.x)};
  state.ada = latent_to_adain(net, *state.latent);
  state.loss_trace = std::move(r.trace);
  state.failed = r.failed;
  state.failure = std::move(r.failure);
  return state;
}

EvalMode EvalMode::parse(const std::string& name) {
  if (name == "none") return {name, "None", "0", 0.0};
  if (name == "z") return {name, "z", "0", 0.0};
  if (name == "adain") return {name, "AdaIN", "0", 0.0};
  if (name == "adain-lr") return {name, "AdaIN", "LR", 0.0};
  if (name.rfind("adain-w", 0) == 0) {
    const std::string v = name.substr(7);
    std::size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty() || !(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("bad regularizer value in mode '" + name + "'");
    }
    return {name, "AdaIN", v, w};
  }
  throw std::invalid_argument("unknown eval mode '" + name + "' (expected none, z, adain, adain-w<value>, adain-lr)");
}

Reconstruction reconstruct_with_mode(const ModelBundle& models, const std::vector<StageImage>& inferred,
                                     const EvalMode& mode, const HyperParams& hyper,
                                     const FeatureExtractor<float>& features) {
  const std::string& input_mode = models.config.options.alg1_input;
  const int stages = models.num_stages() - 1;
  if (mode.method == "None") {
    HyperParams h = hyper;
    h.T = 0;
    return reconstruct_sequential(models.gen, inferred, h, {}, features, input_mode);
  }
  if (mode.method == "AdaIN") {
    std::vector<std::optional<RegularizerWeights>> regs;
    if (mode.w_mode == "LR") {
      if (!models.has_learned_regularizers()) throw std::invalid_argument("adain-lr needs trained regularizers");
      regs = models.regs;
    } else if (mode.w_value != 0.0) {
      for (int s = 1; s <= stages; ++s) {
        regs.push_back(RegularizerWeights::constant(s, models.config.adain_channels, mode.w_value));
      }
    }
    return reconstruct_sequential(models.gen, inferred, hyper, regs, features, input_mode);
  }
  // Latent-code baseline, same sequential protocol.
  Reconstruction rec;
  rec.images.push_back(inferred[0]);
  StageImage input = inferred[0];
  for (int k = 0; k < stages; ++k) {
    OptState st = z_optimization_baseline(models.gen[k], input, inferred[k + 1], hyper, features);
    StageImage out = generate_next(models.gen[k], input, st.ada);
    rec.states.push_back(std::move(st));
    rec.images.push_back(out);
    input = input_mode == "inferred" ? inferred[k + 1] : std::move(out);
  }
  return rec;
}

std::vector<StageImage> resample_stage(const ModelBundle& models, const std::vector<StageImage>& images,
                                       std::vector<AdaINParams>& params, int stage, const LatentCode& z,
                                       bool keep_delta) {
  const int n = models.num_stages();
  if (stage < 1 || stage > n - 1) throw stage_error("resample: stage must be in [1, " + std::to_string(n - 1) + "]");
  if (static_cast<int>(images.size()) != n || static_cast<int>(params.size()) != n - 1) {
    throw std::invalid_argument("resample: need N images and N-1 parameter sets");
  }
  AdaINParams fresh = latent_to_adain(models.gen[stage - 1], z);
  if (keep_delta) fresh.delta = params[stage - 1].delta;
  params[stage - 1] = std::move(fresh);
  std::vector<StageImage> out = images;
  for (int k = stage; k < n; ++k) out[k] = generate_next(models.gen[k - 1], out[k - 1], params[k - 1]);
  return out;
}

std::vector<EvalReport> run_eval_suite(const ModelBundle& models, std::span<const StagedExample> test,
                                       const std::vector<EvalMode>& modes, const HyperParams& hyper,
                                       const EvalOptions& options) {
  const int n_stages = models.num_stages();
  if (test.size() < 2) throw std::invalid_argument("run_eval_suite: need at least two test examples");
  auto log = [&](const std::string& m) {
    if (options.log) options.log(m);
  };
  const auto perceptual = default_perceptual_features<float>(models.config.channels);
  const auto fid_features = default_fid_features<float>(models.config.channels);

  std::vector<StageImage> artworks;
  std::vector<std::vector<StageImage>> inferred;
  for (const auto& ex : test) {
    artworks.push_back(ex.images.back());
    inferred.push_back(infer_all_stages(models.inf, ex.images.back()));
  }
  const std::vector<StageImage>& real = options.real_images.empty() ? artworks : options.real_images;
  const auto real_moments = fit_gaussian(embed_images(*fid_features, real));
  auto fid_vs_real = [&](const std::vector<StageImage>& set) {
    const auto m = fit_gaussian(embed_images(*fid_features, set));
    return frechet_distance(m.mean, m.cov, real_moments.mean, real_moments.cov);
  };

  std::vector<EvalReport> recon_rows, edit_rows;
  for (const auto& mode : modes) {
    EvalReport rec_row{"reconstruction", mode.method, mode.w_mode, 0, 0, 0, static_cast<int>(test.size()),
                       options.seed, {}, {}};
    std::vector<StageImage> finals;
    std::vector<std::vector<StageImage>> all_images;
    std::vector<std::vector<AdaINParams>> all_params;
    for (std::size_t i = 0; i < test.size(); ++i) {
      Reconstruction r = reconstruct_with_mode(models, inferred[i], mode, hyper, *perceptual);
      const double l1 = l1_error(r.images.back(), artworks[i]);
      rec_row.per_image_l1.push_back(l1);
      rec_row.l1 += l1;
      finals.push_back(r.images.back());
      std::vector<AdaINParams> params;
      for (const auto& st : r.states) params.push_back(st.ada);
      all_params.push_back(std::move(params));
      all_images.push_back(std::move(r.images));
      if (!options.reconstructions_dir.empty()) {
        std::filesystem::create_directories(options.reconstructions_dir / mode.name);
        write_png(options.reconstructions_dir / mode.name / (test[i].id + ".png"), finals.back());
      }
    }
    rec_row.l1 /= static_cast<double>(test.size());
    rec_row.fid_mean = fid_vs_real(finals);
    rec_row.trial_fids = {rec_row.fid_mean};
    log("mode " + mode.name + ": l1 " + format_double(rec_row.l1) + " fid " + format_double(rec_row.fid_mean));

    EvalReport edit_row = rec_row;
    edit_row.group = "editing";
    edit_row.trial_fids.clear();
    for (int t = 0; t < options.trials; ++t) {
      std::vector<StageImage> edited;
      for (std::size_t i = 0; i < test.size(); ++i) {
        Rng rng(Rng::derive(options.seed, {0xed17ULL, static_cast<std::uint64_t>(t), i}));
        const int stage = rng.uniform_int(1, n_stages - 1);
        LatentCode z{stage, std::vector<double>(static_cast<std::size_t>(models.config.latent_dim))};
        for (auto& v : z.values) v = rng.normal();
        auto params = all_params[i];
        const auto images =
            resample_stage(models, all_images[i], params, stage, z, models.config.options.resample_keep_delta);
        edited.push_back(images.back());
      }
      edit_row.trial_fids.push_back(fid_vs_real(edited));
    }
    double mean = 0.0;
    for (double f : edit_row.trial_fids) mean += f;
    edit_row.fid_mean = edit_row.trial_fids.empty() ? 0.0 : mean / static_cast<double>(edit_row.trial_fids.size());
    edit_row.fid_std = sample_std(edit_row.trial_fids);
    log("mode " + mode.name + ": edit fid " + format_double(edit_row.fid_mean) + " +- " +
        format_double(edit_row.fid_std));
    recon_rows.push_back(std::move(rec_row));
    edit_rows.push_back(std::move(edit_row));
  }
  recon_rows.insert(recon_rows.end(), edit_rows.begin(), edit_rows.end());
  return recon_rows;
}

void write_eval_csv(const std::filesystem::path& path, std::span<const EvalReport> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "method,w_mode,l1,fid_mean,fid_std,n,seed\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.w_mode << ',' << format_double(r.l1) << ',' << format_double(r.fid_mean) << ','
        << format_double(r.fid_std) << ',' << r.n << ',' << r.seed << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<EvalReport> read_eval_csv(const std::filesystem::path& path, const std::string& group) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "method,w_mode,l1,fid_mean,fid_std,n,seed") throw std::runtime_error(path.string() + ": bad header");
  std::vector<EvalReport> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    EvalReport r;
    r.group = group;
    r.method = f[0];
    r.w_mode = f[1];
    r.l1 = std::stod(f[2]);
    r.fid_mean = std::stod(f[3]);
    r.fid_std = std::stod(f[4]);
    r.n = std::stoi(f[5]);
    r.seed = std::stoull(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

template OptState z_optimization_baseline(const GenerationNet<float>&, const StageImage&, const StageImage&,
                                          const HyperParams&, const FeatureExtractor<float>&);
template OptState z_optimization_baseline(const GenerationNet<double>&, const StageImage&, const StageImage&,
                                          const HyperParams&, const FeatureExtractor<double>&);

}  // namespace artflow
