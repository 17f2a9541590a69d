// sfb: fit, rank, and visualize sparse multivariate functional data.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sfb/boxplot.hpp"
#include "sfb/depth.hpp"
#include "sfb/eval.hpp"
#include "sfb/fdata.hpp"
#include "sfb/fpca.hpp"
#include "sfb/io.hpp"
#include "sfb/par.hpp"
#include "sfb/render.hpp"
#include "sfb/rng.hpp"
#include "sfb/simgen.hpp"

namespace fs = std::filesystem;
using namespace sfb;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

void log_config(const std::string& line) { std::cerr << "sfb: " << line << "\n"; }

Grid grid_for(const SparseSampleSet& s, int grid_points) {
  auto [lo, hi] = s.domain_union();
  if (!(hi > lo)) hi = lo + 1.0;
  return Grid::equidistant(grid_points, lo, hi);
}

CompleteCurves dense_from(const SparseSampleSet& s, const Grid& g) {
  SnapReport snap = snap_to_grid(s, g);
  if (!snap.mask.all_true())
    throw std::runtime_error("input data is not complete on the grid; run `fit` first");
  CompleteCurves curves(s.n(), s.p(), g);
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.p(); ++j)
      for (const auto& ob : s.observations(i, j)) curves.at(i, j, g.nearest(ob.time)) = ob.value;
  return curves;
}

std::string config_text(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  return out.str();
}

struct SimulateArgs {
  int model = 1, n = 100, p = 3, grid_points = 50, M = 9;
  double contamination = 0.1, p_sparse = 1.0, p_curve = 0.0;
  std::uint64_t seed = 1;
  std::string kind = "point";
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  simgen::SimConfig c;
  c.model_id = a.model;
  c.n = a.n;
  c.p = a.p;
  c.grid = Grid::equidistant(a.grid_points, 0.0, 1.0);
  c.contamination = a.contamination;
  c.seed = a.seed;
  c.M = a.M;
  simgen::LabeledDataset data = simgen::generate(c);

  simgen::SparsifyConfig sp;
  sp.kind = simgen::sparsify_kind_from_string(a.kind);
  sp.p_sparse = a.p_sparse;
  sp.p_curve = a.p_curve;
  sp.seed = rng::derive(a.seed, 0xabcd, 0);
  GridMask mask = simgen::sparsify(data.curves, sp);

  fs::create_directories(a.out);
  GridMask full(a.n, a.p, a.grid_points, true);
  SparseSampleSet complete = to_sparse(data.curves, full);
  write_long_csv_file(a.out + "/curves.csv", complete);
  SparseSampleSet sparse = to_sparse(data.curves, mask, &complete.subject_ids(),
                                     &complete.variable_names());
  write_long_csv_file(a.out + "/sparse.csv", sparse);
  io::write_mask_csv(a.out + "/mask.csv", mask, c.grid, complete.subject_ids(),
                     complete.variable_names());
  io::write_truth_csv(a.out + "/truth.csv", data.outlier, complete.subject_ids());
  io::write_text_file(a.out + "/config.toml",
                      config_text({{"model", std::to_string(a.model)},
                                   {"n", std::to_string(a.n)},
                                   {"p", std::to_string(a.p)},
                                   {"grid_points", std::to_string(a.grid_points)},
                                   {"M", std::to_string(a.M)},
                                   {"contamination", std::to_string(a.contamination)},
                                   {"seed", std::to_string(a.seed)},
                                   {"kind", a.kind},
                                   {"p_sparse", std::to_string(a.p_sparse)},
                                   {"p_curve", std::to_string(a.p_curve)}}));
  log_config("simulate wrote curves.csv, sparse.csv, mask.csv, truth.csv, config.toml to " +
             a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse functional boxplots: fitting, depths, outliers, and geometry"};
  app.set_config("--config", "", "Read options from a TOML/INI config file");
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: SFB_THREADS or all cores)");

  // ---- simulate ----
  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "Generate a synthetic labeled dataset");
  c_sim->add_option("--model", sim.model, "Model id 1..8")->check(CLI::Range(1, 8));
  c_sim->add_option("--n", sim.n, "Subjects");
  c_sim->add_option("--p", sim.p, "Variables (3, or 1 for the univariate reduction)");
  c_sim->add_option("--grid-points", sim.grid_points, "Grid resolution");
  c_sim->add_option("--M", sim.M, "Basis truncation");
  c_sim->add_option("--contamination", sim.contamination, "Outlier fraction");
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  c_sim->add_option("--kind", sim.kind, "Sparseness kind: point|peak|partial");
  c_sim->add_option("--p-sparse", sim.p_sparse, "Probability a curve is sparsified");
  c_sim->add_option("--p-curve", sim.p_curve, "Per-curve sparseness level");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  // ---- sparsify ----
  std::string sp_in, sp_out, sp_kind = "point";
  int sp_grid = 50;
  double sp_ps = 1.0, sp_pc = 0.2;
  std::uint64_t sp_seed = 1;
  CLI::App* c_sp = app.add_subcommand("sparsify", "Apply a sparseness mask to complete curves");
  c_sp->add_option("--in", sp_in, "Long CSV of complete curves")->required();
  c_sp->add_option("--grid-points", sp_grid, "Grid resolution");
  c_sp->add_option("--kind", sp_kind, "point|peak|partial");
  c_sp->add_option("--p-sparse", sp_ps, "Probability a curve is sparsified");
  c_sp->add_option("--p-curve", sp_pc, "Per-curve sparseness level");
  c_sp->add_option("--seed", sp_seed, "RNG seed");
  c_sp->add_option("--out", sp_out, "Output directory")->required();

  // ---- fit ----
  std::string fit_in, fit_out, fit_method = "bmfpca";
  int fit_grid = 50, fit_B = 100;
  double fit_alpha = 0.05, fit_bw_mean = 0.0, fit_bw_cov = 0.0, fit_pve = 0.99;
  std::uint64_t fit_seed = 1;
  CsvSchema fit_schema;
  CLI::App* c_fit = app.add_subcommand("fit", "Fit sparse curves (MFPCA / BMFPCA)");
  c_fit->add_option("--in", fit_in, "Long CSV input")->required();
  c_fit->add_option("--grid-points", fit_grid, "Grid resolution");
  c_fit->add_option("--method", fit_method, "mfpca|bmfpca");
  c_fit->add_option("--B", fit_B, "Bootstrap replicates (bmfpca)");
  c_fit->add_option("--alpha", fit_alpha, "Confidence level alpha");
  c_fit->add_option("--bw-mean", fit_bw_mean, "Mean bandwidth, fraction of domain");
  c_fit->add_option("--bw-cov", fit_bw_cov, "Covariance bandwidth, fraction of domain");
  c_fit->add_option("--pve", fit_pve, "Proportion of variance explained threshold");
  c_fit->add_option("--seed", fit_seed, "RNG seed");
  c_fit->add_option("--col-subject", fit_schema.subject, "Subject id column name");
  c_fit->add_option("--col-variable", fit_schema.variable, "Variable column name");
  c_fit->add_option("--col-time", fit_schema.time, "Time column name");
  c_fit->add_option("--col-value", fit_schema.value, "Value column name");
  c_fit->add_option("--out", fit_out, "Output directory")->required();

  // ---- depth ----
  std::string d_fit_dir, d_out, d_method = "mfhd_bmfpca", d_weights = "constant";
  double d_beta = -1.0;
  int d_ndirs = 500;
  CLI::App* c_depth = app.add_subcommand("depth", "Rank fitted curves by a depth method");
  c_depth->add_option("--fit-dir", d_fit_dir, "Directory written by `fit`")->required();
  c_depth->add_option("--method", d_method,
                      "mbd|mfhd_mfpca|mfhd_bmfpca|rmfhd_aw|rmfhd_naw|rmfhd_dm");
  c_depth->add_option("--weights", d_weights, "constant|volume");
  c_depth->add_option("--beta", d_beta, "Volume-weight region level");
  c_depth->add_option("--ndirs", d_ndirs, "Directions for p >= 3");
  c_depth->add_option("--out", d_out, "Output CSV")->required();

  // ---- outlyingness ----
  std::string o_fit_dir, o_out;
  double o_cutoff = 0.993;
  int o_ndirs = 500;
  CLI::App* c_outl = app.add_subcommand("outlyingness", "Directional outlyingness screen");
  c_outl->add_option("--fit-dir", o_fit_dir, "Directory written by `fit`")->required();
  c_outl->add_option("--cutoff-q", o_cutoff, "Chi-square cutoff quantile");
  c_outl->add_option("--ndirs", o_ndirs, "Projection directions for p >= 2");
  c_outl->add_option("--out", o_out, "Output CSV")->required();

  // ---- boxplot ----
  std::string b_fit_dir, b_mask, b_out, b_intensity, b_method = "mfhd_bmfpca",
              b_norm = "per_variable";
  bool b_two_stage = false, b_contours = false;
  double b_factor = 1.5, b_cutoff = 0.993;
  int b_ndirs = 500;
  CLI::App* c_box = app.add_subcommand("boxplot", "Sparse functional boxplot geometry");
  c_box->add_option("--fit-dir", b_fit_dir, "Directory written by `fit`")->required();
  c_box->add_option("--mask", b_mask, "Mask CSV (marks observed cells)");
  c_box->add_option("--depth-method", b_method, "Depth used for ranking");
  c_box->add_flag("--two-stage", b_two_stage, "Remove directional-outlyingness flags first");
  c_box->add_option("--factor", b_factor, "Fence inflation factor");
  c_box->add_option("--cutoff-q", b_cutoff, "Stage-1 chi-square cutoff quantile");
  c_box->add_option("--ndirs", b_ndirs, "Directions for p >= 3");
  c_box->add_option("--out", b_out, "Geometry JSON path")->required();
  c_box->add_option("--intensity", b_intensity, "Also write the intensity field JSON here");
  c_box->add_option("--norm", b_norm, "Intensity normalization: per_variable|global");
  c_box->add_flag("--contours", b_contours, "Compute intensity contours");

  // ---- render ----
  std::string r_in, r_svg;
  render::StyleConfig style;
  CLI::App* c_render = app.add_subcommand("render", "Render geometry/intensity JSON to SVG");
  c_render->add_option("--in", r_in, "Geometry or intensity JSON")->required();
  c_render->add_option("--svg", r_svg, "Output SVG path")->required();
  c_render->add_option("--panel-width", style.panel_width, "Panel width in px");
  c_render->add_option("--panel-height", style.panel_height, "Panel height in px");

  // ---- study ----
  eval::StudyConfig study;
  std::string st_models = "1", st_kinds = "point", st_pcurves = "0.2", st_out;
  CLI::App* c_study = app.add_subcommand("study", "Simulation studies");
  c_study->require_subcommand(1);
  CLI::App* c_study_depth = c_study->add_subcommand("depth", "Spearman depth-choice study");
  CLI::App* c_study_detect = c_study->add_subcommand("detect", "Outlier detection study");
  CLI::App* c_study_cov = c_study->add_subcommand("coverage", "CI coverage study");
  for (CLI::App* sc : {c_study_depth, c_study_detect, c_study_cov}) {
    sc->add_option("--models", st_models, "Comma list of model ids");
    sc->add_option("--kinds", st_kinds, "Comma list of sparseness kinds");
    sc->add_option("--pcurve", st_pcurves, "Comma list of p_curve levels");
    sc->add_option("--psparse", study.p_sparse, "p_sparse level");
    sc->add_option("--reps", study.reps, "Replications");
    sc->add_option("--n", study.n, "Subjects per replication");
    sc->add_option("--seed", study.seed, "RNG seed");
    sc->add_option("--B", study.B, "Bootstrap replicates");
    sc->add_option("--alpha", study.alpha, "CI level");
    sc->add_option("--grid-points", study.grid_points, "Grid resolution");
    sc->add_option("--ndirs", study.ndirs, "Depth directions");
    sc->add_option("--cutoff-q", study.outl_cutoff_q, "Stage-1 cutoff quantile");
    sc->add_option("--out", st_out, "Output directory")->required();
  }

  // ---- pipeline ----
  std::string pl_in, pl_out = "pipeline_out", pl_svg, pl_json, pl_depth = "auto";
  CsvSchema pl_schema;
  int pl_grid = 50, pl_B = 100, pl_ndirs = 500;
  double pl_alpha = 0.05, pl_factor = 1.5, pl_cutoff = 0.993;
  std::uint64_t pl_seed = 1;
  bool pl_two_stage = false, pl_sparse_boxplot = false, pl_intensity = false,
       pl_contours = false;
  std::string pl_norm = "per_variable";
  CLI::App* c_pl = app.add_subcommand("pipeline", "ingest -> fit -> depth -> boxplot -> render");
  c_pl->add_option("--in", pl_in, "Long CSV input")->required();
  c_pl->add_option("--out", pl_out, "Output directory");
  c_pl->add_option("--svg", pl_svg, "Boxplot SVG path (default <out>/boxplot.svg)");
  c_pl->add_option("--json", pl_json, "Geometry JSON path (default <out>/geometry.json)");
  c_pl->add_option("--grid-points", pl_grid, "Grid resolution");
  c_pl->add_option("--B", pl_B, "Bootstrap replicates");
  c_pl->add_option("--alpha", pl_alpha, "CI level");
  c_pl->add_option("--seed", pl_seed, "RNG seed");
  c_pl->add_option("--depth", pl_depth, "auto|mbd|mfhd_bmfpca|...");
  c_pl->add_flag("--two-stage", pl_two_stage, "Two-stage outlier detection");
  c_pl->add_flag("--sparse-boxplot", pl_sparse_boxplot, "Sparse boxplot output (default)");
  c_pl->add_flag("--intensity", pl_intensity, "Also emit the intensity field");
  c_pl->add_option("--norm", pl_norm, "Intensity normalization");
  c_pl->add_flag("--contours", pl_contours, "Intensity contours");
  c_pl->add_option("--factor", pl_factor, "Fence factor");
  c_pl->add_option("--cutoff-q", pl_cutoff, "Stage-1 cutoff quantile");
  c_pl->add_option("--ndirs", pl_ndirs, "Depth directions");
  c_pl->add_option("--col-subject", pl_schema.subject, "Subject id column name");
  c_pl->add_option("--col-variable", pl_schema.variable, "Variable column name");
  c_pl->add_option("--col-time", pl_schema.time, "Time column name");
  c_pl->add_option("--col-value", pl_schema.value, "Value column name");

  app.require_subcommand(1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  par::configure(threads);

  auto split_list = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };

  try {
    if (*c_sim) {
      log_config("simulate model=" + std::to_string(sim.model) + " n=" + std::to_string(sim.n) +
                 " p=" + std::to_string(sim.p) + " kind=" + sim.kind +
                 " p_sparse=" + std::to_string(sim.p_sparse) +
                 " p_curve=" + std::to_string(sim.p_curve) + " seed=" + std::to_string(sim.seed) +
                 " threads=" + std::to_string(par::max_threads()));
      return run_simulate(sim);
    }

    if (*c_sp) {
      log_config("sparsify in=" + sp_in + " kind=" + sp_kind + " p_sparse=" +
                 std::to_string(sp_ps) + " p_curve=" + std::to_string(sp_pc) +
                 " seed=" + std::to_string(sp_seed));
      IngestReport rep = ingest_long_csv_file(sp_in);
      Grid g = grid_for(rep.set, sp_grid);
      CompleteCurves curves = dense_from(rep.set, g);
      simgen::SparsifyConfig c;
      c.kind = simgen::sparsify_kind_from_string(sp_kind);
      c.p_sparse = sp_ps;
      c.p_curve = sp_pc;
      c.seed = sp_seed;
      GridMask mask = simgen::sparsify(curves, c);
      fs::create_directories(sp_out);
      io::write_mask_csv(sp_out + "/mask.csv", mask, g, rep.set.subject_ids(),
                         rep.set.variable_names());
      SparseSampleSet sparse =
          to_sparse(curves, mask, &rep.set.subject_ids(), &rep.set.variable_names());
      write_long_csv_file(sp_out + "/sparse.csv", sparse);
      return 0;
    }

    if (*c_fit) {
      log_config("fit in=" + fit_in + " method=" + fit_method + " B=" + std::to_string(fit_B) +
                 " alpha=" + std::to_string(fit_alpha) + " grid_points=" +
                 std::to_string(fit_grid) + " seed=" + std::to_string(fit_seed) +
                 " threads=" + std::to_string(par::max_threads()));
      IngestReport rep = ingest_long_csv_file(fit_in, fit_schema);
      log_config("ingested " + std::to_string(rep.rows) + " rows, n=" +
                 std::to_string(rep.set.n()) + ", p=" + std::to_string(rep.set.p()));
      Grid g = grid_for(rep.set, fit_grid);
      fpca::Options fopts;
      fopts.bw_mean_frac = fit_bw_mean;
      fopts.bw_cov_frac = fit_bw_cov;
      fopts.pve_uni = fit_pve;
      fopts.pve_mult = fit_pve;
      fpca::MfpcaModel model = fpca::fit_mfpca(rep.set, g, fopts);
      fpca::FitResult fit;
      if (fit_method == "bmfpca") {
        fpca::BootstrapOptions bopts;
        bopts.B = fit_B;
        bopts.alpha = fit_alpha;
        bopts.seed = fit_seed;
        bopts.fit = fopts;
        fit = fpca::bmfpca_fit(rep.set, g, bopts);
      } else if (fit_method == "mfpca") {
        fit = fpca::mfpca_fit_curves(model, rep.set, fit_alpha);
      } else {
        throw CLI::ValidationError("--method", "unknown fit method '" + fit_method + "'");
      }
      io::write_fit_dir(fit_out, fit, rep.set.subject_ids(), rep.set.variable_names(),
                        io::model_summary_text(model));
      SnapReport snap = snap_to_grid(rep.set, g, g.length());  // loose tolerance: nearest cell
      io::write_mask_csv(fit_out + "/mask.csv", snap.mask, g, rep.set.subject_ids(),
                         rep.set.variable_names());
      return 0;
    }

    if (*c_depth) {
      log_config("depth fit_dir=" + d_fit_dir + " method=" + d_method + " weights=" + d_weights);
      io::FitDir fd = io::read_fit_dir(d_fit_dir);
      depth::WeightScheme w;
      if (d_weights == "volume") w.kind = depth::WeightScheme::volume;
      else if (d_weights != "constant")
        throw CLI::ValidationError("--weights", "constant|volume expected");
      w.beta = d_beta;
      depth::Method method = depth::method_from_string(d_method);
      depth::DepthReport report;
      switch (method) {
        case depth::Method::mbd: report = depth::mbd(fd.fit.fitted); break;
        case depth::Method::mfhd_mfpca:
        case depth::Method::mfhd_bmfpca:
          report = depth::mfhd(fd.fit.fitted, w, d_ndirs, method);
          break;
        case depth::Method::rmfhd_aw:
          report = depth::revised_depth(fd.fit, depth::RevisedVariant::aw, w, d_ndirs);
          break;
        case depth::Method::rmfhd_naw:
          report = depth::revised_depth(fd.fit, depth::RevisedVariant::naw, w, d_ndirs);
          break;
        case depth::Method::rmfhd_dm:
          report = depth::revised_depth(fd.fit, depth::RevisedVariant::dm, w, d_ndirs);
          break;
      }
      io::write_depth_csv(d_out, report, fd.subject_ids);
      return 0;
    }

    if (*c_outl) {
      log_config("outlyingness fit_dir=" + o_fit_dir + " cutoff_q=" + std::to_string(o_cutoff));
      io::FitDir fd = io::read_fit_dir(o_fit_dir);
      depth::OutlyingnessReport report =
          depth::directional_outlyingness(fd.fit.fitted, o_cutoff, o_ndirs);
      io::write_outlyingness_csv(o_out, report, fd.subject_ids);
      return 0;
    }

    if (*c_box) {
      log_config("boxplot fit_dir=" + b_fit_dir + " depth=" + b_method +
                 (b_two_stage ? " two_stage" : "") + " out=" + b_out);
      io::FitDir fd = io::read_fit_dir(b_fit_dir);
      const CompleteCurves& curves = fd.fit.fitted;
      GridMask mask(curves.n, curves.p, curves.grid.size(), true);
      bool have_mask = !b_mask.empty();
      if (have_mask)
        mask = io::read_mask_csv(b_mask, curves.grid, fd.subject_ids, fd.variable_names);

      depth::Method method = depth::method_from_string(b_method);
      depth::DepthReport d;
      depth::WeightScheme w;
      switch (method) {
        case depth::Method::mbd: d = depth::mbd(curves); break;
        case depth::Method::rmfhd_aw:
          d = depth::revised_depth(fd.fit, depth::RevisedVariant::aw, w, b_ndirs);
          break;
        case depth::Method::rmfhd_naw:
          d = depth::revised_depth(fd.fit, depth::RevisedVariant::naw, w, b_ndirs);
          break;
        case depth::Method::rmfhd_dm:
          d = depth::revised_depth(fd.fit, depth::RevisedVariant::dm, w, b_ndirs);
          break;
        default: d = depth::mfhd(curves, w, b_ndirs, method); break;
      }
      boxplot::BoxplotOptions bopts;
      bopts.factor = b_factor;
      bopts.variable_names = fd.variable_names;
      boxplot::BoxplotGeometry geom;
      if (b_two_stage) {
        depth::OutlyingnessReport outl =
            depth::directional_outlyingness(curves, b_cutoff, b_ndirs);
        geom = boxplot::two_stage_boxplot(curves, d, outl, bopts, have_mask ? &mask : nullptr);
      } else {
        geom = boxplot::functional_boxplot(curves, d, bopts, have_mask ? &mask : nullptr);
      }
      io::write_text_file(b_out, render::emit_json(geom));
      if (!b_intensity.empty()) {
        boxplot::IntensityOptions iopts;
        iopts.norm = boxplot::norm_from_string(b_norm);
        iopts.contours = b_contours;
        boxplot::IntensityField field = boxplot::intensity_field(mask, fd.fit, geom, iopts);
        io::write_text_file(b_intensity, render::emit_json(field));
      }
      return 0;
    }

    if (*c_render) {
      log_config("render in=" + r_in + " svg=" + r_svg);
      std::string text = io::read_text_file(r_in);
      std::string kind = render::json_kind(text);
      std::string svg;
      if (kind == "boxplot_geometry") svg = render::emit_svg(render::parse_geometry(text), style);
      else if (kind == "intensity_field") svg = render::emit_svg(render::parse_intensity(text), style);
      else throw std::runtime_error("unknown JSON kind '" + kind + "'");
      io::write_text_file(r_svg, svg);
      return 0;
    }

    if (*c_study) {
      study.models.clear();
      for (const std::string& m : split_list(st_models)) study.models.push_back(std::stoi(m));
      study.kinds.clear();
      for (const std::string& k : split_list(st_kinds))
        study.kinds.push_back(simgen::sparsify_kind_from_string(k));
      study.p_curves.clear();
      for (const std::string& v : split_list(st_pcurves)) study.p_curves.push_back(std::stod(v));

      fs::create_directories(st_out);
      eval::EvalReport report;
      std::string name;
      if (*c_study_depth) {
        log_config("study depth models=" + st_models + " pcurve=" + st_pcurves + " reps=" +
                   std::to_string(study.reps) + " B=" + std::to_string(study.B) + " seed=" +
                   std::to_string(study.seed) + " threads=" + std::to_string(par::max_threads()));
        report = eval::run_depth_study(study);
        name = "study_depth";
      } else if (*c_study_detect) {
        log_config("study detect models=" + st_models + " pcurve=" + st_pcurves + " reps=" +
                   std::to_string(study.reps) + " B=" + std::to_string(study.B) + " seed=" +
                   std::to_string(study.seed) + " threads=" + std::to_string(par::max_threads()));
        report = eval::run_detection_study(study);
        name = "study_detect";
      } else {
        log_config("study coverage models=" + st_models + " pcurve=" + st_pcurves + " reps=" +
                   std::to_string(study.reps) + " B=" + std::to_string(study.B) + " alpha=" +
                   std::to_string(study.alpha) + " seed=" + std::to_string(study.seed));
        report = eval::ci_coverage_study(study, study.alpha);
        name = "study_coverage";
      }
      io::write_text_file(st_out + "/" + name + ".csv", report.to_csv());
      io::write_text_file(st_out + "/" + name + ".json", report.to_json());
      return 0;
    }

    if (*c_pl) {
      log_config("pipeline in=" + pl_in + " grid_points=" + std::to_string(pl_grid) + " B=" +
                 std::to_string(pl_B) + " depth=" + pl_depth +
                 (pl_two_stage ? " two_stage" : "") + " seed=" + std::to_string(pl_seed) +
                 " threads=" + std::to_string(par::max_threads()));
      (void)pl_sparse_boxplot;  // the sparse form is the default output
      fs::create_directories(pl_out);
      IngestReport rep = ingest_long_csv_file(pl_in, pl_schema);
      log_config("ingested " + std::to_string(rep.rows) + " rows, n=" +
                 std::to_string(rep.set.n()) + ", p=" + std::to_string(rep.set.p()));
      Grid g = grid_for(rep.set, pl_grid);

      fpca::BootstrapOptions bopts;
      bopts.B = pl_B;
      bopts.alpha = pl_alpha;
      bopts.seed = pl_seed;
      fpca::FitResult fit = fpca::bmfpca_fit(rep.set, g, bopts);
      fpca::MfpcaModel model = fpca::fit_mfpca(rep.set, g, bopts.fit);
      io::write_fit_dir(pl_out + "/fit", fit, rep.set.subject_ids(), rep.set.variable_names(),
                        io::model_summary_text(model));

      SnapReport snap = snap_to_grid(rep.set, g, g.length());
      io::write_mask_csv(pl_out + "/fit/mask.csv", snap.mask, g, rep.set.subject_ids(),
                         rep.set.variable_names());

      std::string depth_name = pl_depth;
      if (depth_name == "auto") depth_name = rep.set.p() == 1 ? "mbd" : "mfhd_bmfpca";
      depth::Method method = depth::method_from_string(depth_name);
      depth::WeightScheme w;
      depth::DepthReport d;
      switch (method) {
        case depth::Method::mbd: d = depth::mbd(fit.fitted); break;
        case depth::Method::rmfhd_aw:
          d = depth::revised_depth(fit, depth::RevisedVariant::aw, w, pl_ndirs);
          break;
        case depth::Method::rmfhd_naw:
          d = depth::revised_depth(fit, depth::RevisedVariant::naw, w, pl_ndirs);
          break;
        case depth::Method::rmfhd_dm:
          d = depth::revised_depth(fit, depth::RevisedVariant::dm, w, pl_ndirs);
          break;
        default: d = depth::mfhd(fit.fitted, w, pl_ndirs, method); break;
      }
      io::write_depth_csv(pl_out + "/depth.csv", d, rep.set.subject_ids());

      boxplot::BoxplotOptions bxopts;
      bxopts.factor = pl_factor;
      bxopts.variable_names = rep.set.variable_names();
      boxplot::BoxplotGeometry geom;
      if (pl_two_stage) {
        depth::OutlyingnessReport outl =
            depth::directional_outlyingness(fit.fitted, pl_cutoff, pl_ndirs);
        io::write_outlyingness_csv(pl_out + "/outlyingness.csv", outl, rep.set.subject_ids());
        geom = boxplot::two_stage_boxplot(fit.fitted, d, outl, bxopts, &snap.mask);
      } else {
        geom = boxplot::functional_boxplot(fit.fitted, d, bxopts, &snap.mask);
      }
      std::string json_path = pl_json.empty() ? pl_out + "/geometry.json" : pl_json;
      std::string svg_path = pl_svg.empty() ? pl_out + "/boxplot.svg" : pl_svg;
      io::write_text_file(json_path, render::emit_json(geom));
      io::write_text_file(svg_path, render::emit_svg(geom, style));

      if (pl_intensity) {
        boxplot::IntensityOptions iopts;
        iopts.norm = boxplot::norm_from_string(pl_norm);
        iopts.contours = pl_contours;
        boxplot::IntensityField field = boxplot::intensity_field(snap.mask, fit, geom, iopts);
        io::write_text_file(pl_out + "/intensity.json", render::emit_json(field));
        io::write_text_file(pl_out + "/intensity.svg", render::emit_svg(field, style));
      }
      int n_out = static_cast<int>(boxplot::outlier_subjects(geom).size());
      log_config("pipeline detected " + std::to_string(n_out) + " outliers; wrote " + svg_path +
                 " and " + json_path);
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "sfb: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io::IoError& e) {
    std::cerr << "sfb: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "sfb: error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
