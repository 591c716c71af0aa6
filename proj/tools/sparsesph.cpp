// sparsesph: simulate, analyze, reconstruct and render sparse random fields on the sphere.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 degenerate input.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sparsesph/sparsesph.hpp"

namespace {

using namespace sparsesph;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_config(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared spectrum and generator options

struct SpectrumOptions {
  std::string model = "whittle-matern";
  double beta = 1.5;
  int lmax = 128;
  std::string csv;

  void add(CLI::App* app, int default_lmax) {
    lmax = default_lmax;
    app->add_option("--spectrum-model", model, "whittle-matern, whittle-matern-exact or csv")
        ->check(CLI::IsMember({"whittle-matern", "whittle-matern-exact", "csv"}))
        ->capture_default_str();
    app->add_option("--beta", beta, "Whittle-Matern exponent")->capture_default_str();
    app->add_option("--lmax", lmax, "band limit")->capture_default_str();
    app->add_option("--spectrum-csv", csv, "spectrum table (ell,C_ell) for --spectrum-model csv");
  }

  PowerSpectrum build() const {
    require_config(lmax >= 0 && lmax <= 4096, "--lmax must lie in [0, 4096]");
    if (model == "csv") {
      require_config(!csv.empty(), "--spectrum-model csv needs --spectrum-csv");
      std::istringstream in(read_file(csv));
      const PowerSpectrum s = read_spectrum_csv(in);
      require_config(s.lmax() >= lmax, "--spectrum-csv has fewer rows than lmax+1");
      return s.truncated(lmax);
    }
    require_config(beta > 0.5, "--beta must exceed 0.5");
    return model == "whittle-matern" ? whittle_matern(beta, lmax) : whittle_matern_exact(beta, lmax);
  }

  void echo(Json& j) const {
    j["spectrum_model"] = model;
    if (model == "csv")
      j["spectrum_csv"] = csv;
    else
      j["beta"] = beta;
    j["lmax"] = lmax;
  }
};

struct GeneratorOptions {
  std::string weights = "gaussian";
  int K = 4;
  double fnl = 0.0;
  double gamma_c = 4.0;
  CLI::Option* k_option = nullptr;

  void add(CLI::App* app) {
    app->add_option("--weights", weights, "gaussian, rademacher, fnl or general-quadratic")
        ->check(CLI::IsMember({"gaussian", "rademacher", "fnl", "general-quadratic"}))
        ->capture_default_str();
    k_option = app->add_option("--K", K, "directions per multipole (i.i.d. weights)")->capture_default_str();
    app->add_option("--fnl", fnl, "nonlinearity parameter")->capture_default_str();
    app->add_option("--gamma-c", gamma_c, "decay exponent of the built-in quadratic family")->capture_default_str();
  }

  WeightSpec build(const PowerSpectrum& s) const {
    WeightSpec w;
    if (weights == "gaussian" || weights == "rademacher") {
      require_config(K >= 1, "--K must be at least 1");
      w.kind = weights == "gaussian" ? WeightSpec::Kind::iid_gaussian : WeightSpec::Kind::iid_rademacher;
      w.K = K;
    } else {
      require_config(k_option->count() == 0 || K == 1, "quadratic weight variants use K = 1");
      require_config(std::isfinite(fnl), "--fnl must be finite");
      w.K = 1;
      if (weights == "fnl") {
        w.kind = WeightSpec::Kind::fnl;
        w.fnl = fnl;
      } else {
        require_config(std::isfinite(gamma_c) && gamma_c >= 0.0, "--gamma-c must be non-negative");
        w.kind = WeightSpec::Kind::general_quadratic;
        w.coefficients = QuadraticCoefficients::decaying(s, gamma_c);
      }
    }
    return w;
  }

  void echo(Json& j, const WeightSpec& w) const {
    j["weights"] = weights;
    j["K"] = w.K;
    if (weights == "fnl") j["fnl"] = fnl;
    if (weights == "general-quadratic") j["gamma_c"] = gamma_c;
  }
};

SparseField generate(const PowerSpectrum& s, const WeightSpec& w, const SpectrumOptions& so, RandomStream& rng) {
  SparseField f = generate_weights(w, s, rng);
  f.provenance().spectrum_model = so.model;
  if (so.model != "csv") f.provenance().parameters["beta"] = so.beta;
  return f;
}

fs::path with_suffix(const std::string& prefix, const char* suffix) { return fs::path(prefix + suffix); }

void write_config(const std::string& prefix, const Json& j) {
  write_file_atomic(with_suffix(prefix, ".config.json"), dump_json(j));
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateCmd {
  SpectrumOptions spectrum;
  GeneratorOptions gen;
  std::uint64_t seed = 0;
  int grid_lmax = -1;
  bool no_grid = false;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("simulate", "draw a sparse field and its grid samples");
    spectrum.add(c, 128);
    gen.add(c);
    c->add_option("--seed", seed, "master seed")->capture_default_str();
    c->add_option("--grid-lmax", grid_lmax, "grid band limit (default: lmax)");
    c->add_flag("--no-grid", no_grid, "skip the grid file");
    c->add_option("--out", out, "output prefix")->required();
    c->callback([this] { run(); });
  }

  void run() {
    const PowerSpectrum s = spectrum.build();
    const WeightSpec w = gen.build(s);
    const int glmax = grid_lmax < 0 ? spectrum.lmax : grid_lmax;
    require_config(no_grid || glmax >= spectrum.lmax, "--grid-lmax must be at least lmax");
    RandomStream rng(seed);
    SparseField f = generate(s, w, spectrum, rng);

    Json cfg;
    cfg["command"] = "simulate";
    spectrum.echo(cfg);
    gen.echo(cfg, w);
    cfg["seed"] = seed;
    Json counts;
    counts["weights"] = f.weight_count();
    counts["direction_slots"] = f.direction_count();
    counts["parameters"] = f.parameter_count();
    counts["dense_coefficients"] = f.dense_coefficient_count();
    cfg["counts"] = counts;
    cfg["field"] = with_suffix(out, ".field.json").string();
    write_sparse_field(with_suffix(out, ".field.json"), f);
    if (!no_grid) {
      const SphereGrid g(glmax);
      Json grid;
      grid["lmax"] = glmax;
      grid["ntheta"] = g.ntheta();
      grid["nphi"] = g.nphi();
      grid["path"] = with_suffix(out, ".grid.sgf").string();
      cfg["grid"] = grid;
      write_grid(with_suffix(out, ".grid.sgf"), synthesize_grid(f, g));
    }
    write_config(out, cfg);
    std::cout << "parameters " << f.parameter_count() << " (weights " << f.weight_count() << ", directions "
              << f.direction_count() << ") vs dense " << f.dense_coefficient_count() << "\n";
  }
};

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeCmd {
  std::string input;
  std::string out;
  int mc = 0;
  std::uint64_t seed = 0;
  SpectrumOptions spectrum;
  GeneratorOptions gen;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("analyze", "empirical power spectrum of a field file, or a Monte Carlo mean");
    c->add_option("input", input, "sparse field, grid or coefficient file");
    c->add_option("--out", out, "output prefix")->required();
    c->add_option("--mc", mc, "average the exact spectrum over this many simulated replicas");
    c->add_option("--seed", seed, "master seed for --mc")->capture_default_str();
    spectrum.add(c, 32);
    gen.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    Json cfg;
    cfg["command"] = "analyze";
    std::ostringstream csv;
    if (mc > 0) {
      require_config(input.empty(), "--mc takes no input file");
      require_config(mc >= 2, "--mc needs at least 2 replicas");
      run_mc(cfg, csv);
    } else {
      require_config(!input.empty(), "analyze needs an input file");
      cfg["input"] = input;
      run_file(cfg, csv);
    }
    write_file_atomic(with_suffix(out, ".spectrum.csv"), csv.str());
    write_config(out, cfg);
  }

  void run_file(Json& cfg, std::ostringstream& csv) const {
    const std::string data = read_file(input);
    switch (detect_file_kind(data)) {
      case FileKind::grid: {
        cfg["input_kind"] = "grid";
        write_spectrum_csv(csv, PowerSpectrum(power_spectrum(analyze(decode_grid(data)))));
        break;
      }
      case FileKind::coefficients: {
        cfg["input_kind"] = "coefficients";
        write_spectrum_csv(csv, PowerSpectrum(power_spectrum(decode_coefficients(data))));
        break;
      }
      case FileKind::sparse_field: {
        cfg["input_kind"] = "sparse_field";
        const SparseField f = decode_sparse_field(data);
        const auto quad = power_spectrum(analyze(synthesize_grid(f, SphereGrid(f.lmax()))));
        const auto exact = exact_empirical_spectrum(f);
        csv << "ell,C_ell,C_ell_exact,difference\n";
        for (int l = 0; l <= f.lmax(); ++l)
          csv << l << ',' << fmt17(quad[l]) << ',' << fmt17(exact[l]) << ',' << fmt17(quad[l] - exact[l]) << '\n';
        break;
      }
    }
  }

  void run_mc(Json& cfg, std::ostringstream& csv) const {
    const PowerSpectrum s = spectrum.build();
    const WeightSpec w = gen.build(s);
    spectrum.echo(cfg);
    gen.echo(cfg, w);
    cfg["mc"] = mc;
    cfg["seed"] = seed;
    const RandomStream root(seed);
    const std::size_t L1 = static_cast<std::size_t>(s.lmax()) + 1;
    std::vector<std::vector<double>> per_ell(L1, std::vector<double>(static_cast<std::size_t>(mc)));
    detail::parallel_chunks(static_cast<std::size_t>(mc), [&](std::size_t b, std::size_t e) {
      for (std::size_t r = b; r < e; ++r) {
        RandomStream rng = root.split(r);
        const auto c = exact_empirical_spectrum(generate_weights(w, s, rng));
        for (std::size_t l = 0; l < L1; ++l) per_ell[l][r] = c[l];
      }
    });
    csv << "ell,C_ell,mean_C_hat,standard_error,z\n";
    for (std::size_t l = 0; l < L1; ++l) {
      const auto est = detail::mean_and_se(per_ell[l]);
      const double z = est.standard_error > 0.0 ? (est.estimate - s[static_cast<int>(l)]) / est.standard_error : 0.0;
      csv << l << ',' << fmt17(s[static_cast<int>(l)]) << ',' << fmt17(est.estimate) << ','
          << fmt17(est.standard_error) << ',' << fmt17(z) << '\n';
    }
  }
};

// ---------------------------------------------------------------------------
// bispectrum

struct BispectrumCmd {
  std::string mode = "mc";
  double fnl = 0.05;
  int M = 100000;
  std::uint64_t seed = 0;
  std::vector<std::string> triples;
  SpectrumOptions spectrum;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("bispectrum", "reduced bispectrum of the f_NL weights");
    c->add_option("--mode", mode, "mc, map or both")->check(CLI::IsMember({"mc", "map", "both"}))->capture_default_str();
    c->add_option("--fnl", fnl, "nonlinearity parameter")->capture_default_str();
    c->add_option("--M", M, "number of weight draws")->capture_default_str();
    c->add_option("--seed", seed, "master seed")->capture_default_str();
    c->add_option("--triple", triples, "l1,l2,l3 (repeatable; default: all ordered triples)");
    spectrum.add(c, 4);
    c->add_option("--out", out, "output prefix")->required();
    c->callback([this] { run(); });
  }

  std::vector<std::array<int, 3>> resolve_triples(int L) const {
    std::vector<std::array<int, 3>> t;
    if (triples.empty()) {
      for (int a = 0; a <= L; ++a)
        for (int b = a; b <= L; ++b)
          for (int c = b; c <= L; ++c)
            if (c <= a + b) t.push_back({a, b, c});
      return t;
    }
    for (const auto& s : triples) {
      std::array<int, 3> v{};
      char c1 = 0, c2 = 0;
      std::istringstream in(s);
      require_config(static_cast<bool>(in >> v[0] >> c1 >> v[1] >> c2 >> v[2]) && c1 == ',' && c2 == ',' && in.eof(),
                     "--triple expects l1,l2,l3");
      for (int l : v) require_config(l >= 0 && l <= L, "--triple multipole outside [0, lmax]");
      t.push_back(v);
    }
    return t;
  }

  void run() {
    require_config(M >= 2, "--M must be at least 2");
    require_config(std::isfinite(fnl), "--fnl must be finite");
    const PowerSpectrum s = spectrum.build();
    const auto tr = resolve_triples(s.lmax());
    const bool want_mc = mode != "map", want_map = mode != "mc";
    const bool want_oracle = s.lmax() <= 6;
    const RandomStream root(seed);

    std::vector<McEstimate> mc;
    if (want_mc) mc = mc_reduced_bispectrum_many(s, fnl, tr, M, root.split(0));
    std::vector<HarmonicCoefficients> maps;
    if (want_map) {
      maps.resize(static_cast<std::size_t>(M), HarmonicCoefficients(s.lmax()));
      const RandomStream mroot = root.split(1);
      const auto coeffs = QuadraticCoefficients::fnl(s, fnl);
      detail::parallel_chunks(static_cast<std::size_t>(M), [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
          RandomStream rng = mroot.split(r);
          maps[r] = harmonic_coeffs(gen_general_quadratic_weights(s, coeffs, rng));
        }
      });
    }

    std::ostringstream csv;
    csv << "l1,l2,l3,formula,oracle,formula_matches_oracle";
    if (want_mc) csv << ",mc_estimate,mc_se,mc_within_5se";
    if (want_map) csv << ",map_estimate,map_se,map_note";
    csv << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const auto [a, b, c] = tr[i];
      const auto f = reduced_bispectrum_formula(s, fnl, a, b, c, want_oracle);
      const double reference = f.oracle ? *f.oracle : f.value;
      csv << a << ',' << b << ',' << c << ',' << fmt17(f.value) << ',' << (f.oracle ? fmt17(*f.oracle) : "") << ','
          << (f.oracle ? (f.agrees_with_oracle ? "1" : "0") : "");
      if (want_mc)
        csv << ',' << fmt17(mc[i].estimate) << ',' << fmt17(mc[i].standard_error) << ','
            << (std::abs(mc[i].estimate - reference) <= 5.0 * mc[i].standard_error ? "1" : "0");
      if (want_map) {
        const auto m = map_bispectrum_estimate(maps, a, b, c);
        csv << ',' << fmt17(m.estimate) << ',' << fmt17(m.standard_error) << ',' << m.note;
      }
      csv << '\n';
    }
    write_file_atomic(with_suffix(out, ".bispectrum.csv"), csv.str());

    Json cfg;
    cfg["command"] = "bispectrum";
    cfg["mode"] = mode;
    spectrum.echo(cfg);
    cfg["fnl"] = fnl;
    cfg["M"] = M;
    cfg["seed"] = seed;
    Json jt = Json::array();
    for (const auto& t : tr) jt.push_back(t);
    cfg["triples"] = jt;
    write_config(out, cfg);
  }
};

// ---------------------------------------------------------------------------
// reconstruct

struct ReconstructCmd {
  std::string input;
  std::string mode = "mono";
  int ell = -1;
  int K = 0;
  double eps = 0.05;
  std::size_t coarse_points = 0;
  int refine_steps = 20;
  bool strict = false;
  std::string out;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("reconstruct", "greedy sparse reconstruction");
    c->add_option("input", input, "sparse field, grid or coefficient file")->required();
    c->add_option("--mode", mode, "mono or poly")->check(CLI::IsMember({"mono", "poly"}))->capture_default_str();
    c->add_option("--ell", ell, "multipole for mono mode");
    c->add_option("--K", K, "maximum number of steps (mono default: 2 ell + 1; poly default: 16)");
    c->add_option("--eps", eps, "index threshold parameter for poly mode")->capture_default_str();
    c->add_option("--coarse-points", coarse_points, "lattice size of the direction search (0: default rule)");
    c->add_option("--refine-steps", refine_steps, "local refinement rounds")->capture_default_str();
    c->add_flag("--strict", strict, "treat warnings as configuration errors");
    c->add_option("--out", out, "output prefix")->required();
    c->callback([this] { run(); });
  }

  HarmonicCoefficients load() const {
    const std::string data = read_file(input);
    switch (detect_file_kind(data)) {
      case FileKind::grid:
        return analyze(decode_grid(data));
      case FileKind::coefficients:
        return decode_coefficients(data);
      case FileKind::sparse_field:
        return harmonic_coeffs(decode_sparse_field(data));
    }
    throw IoError("reconstruct: unknown input kind");
  }

  void run() {
    require_config(refine_steps >= 0, "--refine-steps must be non-negative");
    SearchConfig cfg_search;
    cfg_search.coarse_points = coarse_points;
    cfg_search.refine_steps = refine_steps;
    Json cfg;
    cfg["command"] = "reconstruct";
    cfg["input"] = input;
    cfg["mode"] = mode;
    if (mode == "mono") {
      require_config(ell >= 0, "mono mode needs --ell");
      const HarmonicCoefficients a = load();
      require_config(ell <= a.lmax(), "--ell exceeds the band limit of the input");
      const int steps = K == 0 ? 2 * ell + 1 : K;
      require_config(steps >= 1, "--K must be at least 1");
      if (steps > 2 * ell + 1) {
        std::cerr << "warning: K = " << steps << " exceeds 2 ell + 1 = " << 2 * ell + 1 << "\n";
        require_config(!strict, "K exceeds 2 ell + 1 (--strict)");
      }
      const auto al = a.ell(ell);
      if (vector_norm(al) == 0.0) throw DegenerateInput("reconstruct: multipole has zero energy");
      const MonoResult r = greedy_mono(al, steps, cfg_search);
      const auto check = empirical_spectrum_of_mono_output(r);
      Json trace = to_json(r);
      Json spec;
      spec["from_weights"] = check.from_weights;
      spec["from_output"] = check.from_output;
      spec["from_input"] = check.from_input;
      spec["defect_bound"] = check.defect_bound;
      spec["relative_difference"] = check.relative_difference;
      spec["flagged"] = check.flagged;
      trace["spectrum_check"] = spec;
      write_file_atomic(with_suffix(out, ".trace.json"), dump_json(trace));
      write_sparse_field(with_suffix(out, ".field.json"), r.component);
      HarmonicCoefficients oc(ell);
      for (int m = -ell; m <= ell; ++m) oc(ell, m) = r.output[static_cast<std::size_t>(m + ell)];
      write_coefficients(with_suffix(out, ".coeffs.json"), oc);
      cfg["ell"] = ell;
      cfg["K"] = steps;
      const double rel = r.trace.initial_norm > 0.0 ? vector_norm(r.residual) / r.trace.initial_norm : 0.0;
      std::cout << "steps " << r.trace.steps.size() << " stop " << r.trace.stop_reason << " relative residual "
                << fmt17(rel) << "\n";
    } else {
      require_config(eps > 0.0 && eps < 1.0, "--eps must lie in (0, 1)");
      const int steps = K == 0 ? 16 : K;
      require_config(steps >= 1, "--K must be at least 1");
      const HarmonicCoefficients a = load();
      const PolyResult r = greedy_poly(a, eps, steps, cfg_search);
      write_file_atomic(with_suffix(out, ".trace.json"), dump_json(to_json(r)));
      write_sparse_field(with_suffix(out, ".field.json"), r.output_field);
      write_coefficients(with_suffix(out, ".coeffs.json"), r.output);
      cfg["eps"] = eps;
      cfg["K"] = steps;
      HarmonicCoefficients diff = a;
      diff -= r.output;
      std::cout << "steps " << r.trace.steps.size() << " termination " << r.trace.termination << " last index "
                << fmt17(r.trace.steps.back().index) << " relative residual " << fmt17(diff.norm() / a.norm()) << "\n";
    }
    cfg["coarse_points"] = coarse_points;
    cfg["refine_steps"] = refine_steps;
    cfg["strict"] = strict;
    write_config(out, cfg);
  }
};

// ---------------------------------------------------------------------------
// render

struct RenderCmd {
  std::string input;
  std::string out;
  RenderOptions opt;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("render", "equirectangular PNG of a grid field");
    c->add_option("input", input, "grid file")->required();
    c->add_option("--out", out, "output PNG path")->required();
    c->add_option("--width", opt.width, "image width; height is width / 2")->capture_default_str();
    c->add_flag("--symmetric", opt.symmetric, "map [-A, A] with A = max |value|");
    c->add_flag("--palette", opt.palette, "diverging colour table instead of grayscale");
    c->callback([this] { run(); });
  }

  void run() {
    require_config(opt.width >= 2 && opt.width % 2 == 0 && opt.width <= 16384, "--width must be even, in [2, 16384]");
    const GridField g = read_grid(input);
    write_png(out, g, opt);
    Json cfg;
    cfg["command"] = "render";
    cfg["input"] = input;
    cfg["width"] = opt.width;
    cfg["height"] = opt.width / 2;
    cfg["symmetric"] = opt.symmetric;
    cfg["palette"] = opt.palette;
    write_file_atomic(fs::path(out + ".config.json"), dump_json(cfg));
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse random fields on the sphere"};
  app.require_subcommand(1);
  SimulateCmd simulate;
  AnalyzeCmd analyze_cmd;
  BispectrumCmd bispectrum;
  ReconstructCmd reconstruct;
  RenderCmd render;
  simulate.add(app);
  analyze_cmd.add(app);
  bispectrum.add(app);
  reconstruct.add(app);
  render.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sparsesph::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sparsesph::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const sparsesph::DegenerateInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
