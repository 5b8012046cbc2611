// wlcasimir: command-line front end for the worldline Casimir toolkit.
//
// Subcommands: energy, spectral, oracle-rect, lab, scatter1d, lmin.
// Exit codes: 0 success, 1 input error, 2 convergence or runtime failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "wlc/engine.hpp"
#include "wlc/heat_kernel_lab.hpp"
#include "wlc/manifest.hpp"
#include "wlc/rectangle_oracle.hpp"
#include "wlc/scattering_1d.hpp"
#include "wlc/scene_io.hpp"

namespace {

bool use_color() {
    static const bool on = ::isatty(2) != 0 && std::getenv("NO_COLOR") == nullptr;
    return on;
}

void log_info(const std::string& msg) {
    std::fprintf(stderr, "%s\n", msg.c_str());
}

void log_error(const std::string& msg) {
    if (use_color())
        std::fprintf(stderr, "\033[31merror:\033[0m %s\n", msg.c_str());
    else
        std::fprintf(stderr, "error: %s\n", msg.c_str());
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
    if (!f) throw std::runtime_error("short write to " + path);
}

// shared sampling/grid flags for the engine-backed subcommands
void add_engine_flags(CLI::App* cmd, wlc::EngineConfig& cfg,
                      std::string& scheme) {
    cmd->add_option("--samples", cfg.n_loops, "loop count L")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--points", cfg.points,
                    "samples per loop M (the run also uses the even-index "
                    "M/2 half as a refinement pair)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", cfg.seed, "base RNG seed");
    cmd->add_option("--workers", cfg.workers, "worker threads (0 = all cores)");
    cmd->add_option("--x-samples", cfg.x_samples,
                    "base points per loop per beta node")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--scheme", scheme, "loop scheme: bisection | incremental")
        ->check(CLI::IsMember({"bisection", "incremental"}));
    cmd->add_flag_callback(
        "--no-extrapolate", [&cfg] { cfg.extrapolate = false; },
        "report the plain fine-level estimate instead of the "
        "refinement-pair extrapolation");
    cmd->add_option("--loop-cache", cfg.loop_cache,
                    "loop bank file; created when missing, reused when present");
}

wlc::LoopScheme scheme_from(const std::string& s) {
    return s == "incremental" ? wlc::LoopScheme::incremental
                              : wlc::LoopScheme::bisection;
}

void ensure_loop_cache(const wlc::EngineConfig& cfg, std::uint32_t dim) {
    if (cfg.loop_cache.empty()) return;
    if (std::filesystem::exists(cfg.loop_cache)) return;
    const wlc::LoopEnsembleSpec spec{cfg.n_loops, cfg.points, dim, cfg.seed,
                                     cfg.scheme};
    wlc::write_loop_cache(cfg.loop_cache, spec);
    log_info("wrote loop cache " + cfg.loop_cache);
}

std::string spectral_csv(const std::vector<wlc::SpectralEstimate>& rows,
                         const std::vector<std::string>& header) {
    std::string out;
    for (const std::string& h : header) out += "# " + h + "\n";
    out += "beta,phi_tilde,stderr,n_loops,box_volume\n";
    for (const wlc::SpectralEstimate& r : rows) {
        out += num(r.beta) + "," + num(r.value) + "," + num(r.stderr_) + "," +
               std::to_string(r.n_loops) + "," + num(r.box_volume) + "\n";
    }
    return out;
}

// beta list shared by the lab and engine grids: explicit log grid
std::vector<double> log_grid(double lo, double hi, std::uint32_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw std::invalid_argument("need 0 < beta-min < beta-max and at "
                                    "least two nodes");
    std::vector<double> nodes(n);
    for (std::uint32_t i = 0; i < n; ++i)
        nodes[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
    return nodes;
}

int dispatch(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const wlc::SceneParseError& e) {
        log_error(e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        log_error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log_error(e.what());
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "worldline Casimir toolkit\n"
        "CSV outputs: engine tables use columns "
        "beta,phi_tilde,stderr,n_loops,box_volume; the lab table uses "
        "beta,phi_tilde; oracle-rect uses value,tail_bound; scatter1d uses "
        "value,quadrature_error.  '#' lines carry run summaries."};
    app.require_subcommand(1);

    // ------------------------------------------------------------- energy
    auto* energy = app.add_subcommand(
        "energy", "integrate the subtracted energy of a scene over beta "
                  "(CSV columns: beta,phi_tilde,stderr,n_loops,box_volume)");
    wlc::EngineConfig ecfg;
    std::string escene, escheme = "bisection", eout = "run", efrom;
    bool eack = false;
    energy->add_option("--scene", escene, "scene file");
    energy->add_option("--out", eout, "output basename (writes .csv and .json)");
    energy->add_option("--from-manifest", efrom,
                       "replay a recorded run; other sampling flags are "
                       "ignored");
    energy->add_option("--beta-min", ecfg.beta_min,
                       "lower quadrature edge (0 = automatic)");
    energy->add_option("--beta-max", ecfg.beta_max,
                       "upper quadrature edge (0 = automatic, adaptive tail)");
    energy->add_option("--beta-nodes", ecfg.beta_nodes,
                       "node count for an explicit [beta-min, beta-max] grid");
    energy->add_option("--nodes-per-decade", ecfg.nodes_per_decade,
                       "grid density for automatic grids")
        ->check(CLI::PositiveNumber);
    energy->add_flag("--acknowledge-undecidable", eack,
                     "proceed when the empty-intersection check is undecidable");
    add_engine_flags(energy, ecfg, escheme);

    // ----------------------------------------------------------- spectral
    auto* spectral = app.add_subcommand(
        "spectral", "estimate the subtracted spectral function at one beta "
                    "(CSV columns: beta,phi_tilde,stderr,n_loops,box_volume)");
    wlc::EngineConfig scfg;
    std::string sscene, sscheme = "bisection", sout = "spectral";
    double sbeta = 0.0;
    spectral->add_option("--scene", sscene, "scene file")->required();
    spectral->add_option("--beta", sbeta, "diffusion time")->required();
    spectral->add_option("--out", sout, "output basename");
    add_engine_flags(spectral, scfg, sscheme);

    // -------------------------------------------------------- oracle-rect
    auto* rect = app.add_subcommand(
        "oracle-rect", "closed-form rectangle-family energy "
                       "(CSV columns: value,tail_bound)");
    wlc::RectangleConfig rcfg;
    std::vector<double> rlengths{1.0};
    std::string rout;
    rect->add_option("--dim", rcfg.dim, "dimension 1..3")->required();
    rect->add_option("--lengths", rlengths, "edge lengths, one per dimension")
        ->expected(1, 3);
    rect->add_option("--terms", rcfg.n_max,
                     "lattice-sum truncation (0 = certified evaluation)");
    rect->add_option("--out", rout, "optional CSV path");

    // ---------------------------------------------------------------- lab
    auto* lab = app.add_subcommand(
        "lab", "finite-difference spectral subtraction on a boxed scene "
               "(CSV columns: beta,phi_tilde)");
    std::string lscene, lout;
    wlc::GridConfig lgrid;
    std::vector<double> lbetas;
    double lbmin = 0.0, lbmax = 0.0;
    std::uint32_t lbnodes = 0;
    lab->add_option("--scene", lscene, "scene file (needs a domain box)")
        ->required();
    lab->add_option("--points", lgrid.points, "interior grid nodes per axis")
        ->check(CLI::PositiveNumber);
    lab->add_option("--beta", lbetas, "explicit beta values (repeatable)");
    lab->add_option("--beta-min", lbmin, "log-grid lower edge");
    lab->add_option("--beta-max", lbmax, "log-grid upper edge");
    lab->add_option("--beta-nodes", lbnodes, "log-grid node count");
    lab->add_option("--out", lout, "optional CSV path");

    // ----------------------------------------------------------- scatter1d
    auto* scat = app.add_subcommand(
        "scatter1d", "scattering-theory energy of 1D delta plates "
                     "(CSV columns: value,quadrature_error)");
    std::vector<double> spos, scoup;
    double srtol = 1e-9;
    std::string scout;
    scat->add_option("--positions", spos, "plate positions")->required()
        ->expected(2, 3);
    scat->add_option("--couplings", scoup, "delta strengths lambda")
        ->required()
        ->expected(2, 3);
    scat->add_option("--rel-tol", srtol, "quadrature relative tolerance");
    scat->add_option("--out", scout, "optional CSV path");

    // ---------------------------------------------------------------- lmin
    auto* lmin = app.add_subcommand(
        "lmin", "shortest closed tour touching every object "
                "(CSV columns: lmin,approximate)");
    std::string mscene, mout;
    lmin->add_option("--scene", mscene, "scene file")->required();
    lmin->add_option("--out", mout, "optional CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (app.got_subcommand(energy)) {
        return dispatch([&] {
            wlc::Scene scene;
            ecfg.scheme = scheme_from(escheme);
            ecfg.acknowledge_undecidable = eack;
            if (!efrom.empty()) {
                const wlc::RunManifest m = wlc::load_manifest(efrom);
                auto inputs = wlc::manifest_run_inputs(m);
                scene = std::move(inputs.first);
                ecfg = inputs.second;
                ecfg.acknowledge_undecidable = eack;
                log_info("replaying manifest " + efrom);
            } else {
                if (escene.empty())
                    throw std::invalid_argument("--scene or --from-manifest "
                                                "is required");
                scene = wlc::load_scene_file(escene);
            }
            ensure_loop_cache(ecfg, scene.dim);
            const auto t0 = std::chrono::steady_clock::now();
            const wlc::EnergyResult res = wlc::integrate_energy(scene, ecfg);
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
            const double total_err = res.stat_error + res.quadrature_error +
                                     res.discretization_error;
            std::vector<std::string> header{
                "wlcasimir energy",
                "value = " + num(res.value),
                "stat_error = " + num(res.stat_error),
                "quadrature_error = " + num(res.quadrature_error),
                "discretization_error = " + num(res.discretization_error),
                "lmin = " + num(res.lmin) +
                    (res.lmin_approximate ? " (approximate upper bound)" : ""),
            };
            write_file(eout + ".csv", spectral_csv(res.spectral, header));
            wlc::RunManifest m = wlc::make_manifest(scene, ecfg, res);
            m.wall_seconds = wall;
            wlc::save_manifest(eout + ".json", m);
            std::printf("energy = %s  (stat %s, quad %s, disc %s, total %s)\n",
                        num(res.value).c_str(), num(res.stat_error).c_str(),
                        num(res.quadrature_error).c_str(),
                        num(res.discretization_error).c_str(),
                        num(total_err).c_str());
            log_info("wrote " + eout + ".csv and " + eout + ".json (" +
                     num(wall) + " s)");
        });
    }

    if (app.got_subcommand(spectral)) {
        return dispatch([&] {
            scfg.scheme = scheme_from(sscheme);
            const wlc::Scene scene = wlc::load_scene_file(sscene);
            ensure_loop_cache(scfg, scene.dim);
            const auto t0 = std::chrono::steady_clock::now();
            const wlc::SpectralEstimate est =
                wlc::estimate_spectral(scene, sbeta, scfg);
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
            std::vector<std::string> header{"wlcasimir spectral"};
            write_file(sout + ".csv", spectral_csv({est}, header));
            wlc::RunManifest m;
            m.kind = "spectral";
            m.wall_seconds = wall;
            m.scene_text = wlc::render_scene(scene);
            m.scene_hash = wlc::scene_hash(scene);
            m.seed = scfg.seed;
            m.n_loops = scfg.n_loops;
            m.points = scfg.points;
            m.workers = scfg.workers;
            m.x_samples = scfg.x_samples;
            m.scheme = sscheme;
            m.extrapolate = scfg.extrapolate;
            m.beta_min = sbeta;
            m.beta_max = sbeta;
            m.beta_nodes = 1;
            m.nodes_per_decade = scfg.nodes_per_decade;
            m.grid = {sbeta};
            m.value = est.value;
            m.stat_error = est.stderr_;
            wlc::save_manifest(sout + ".json", m);
            std::printf("phi_tilde(%s) = %s +- %s\n", num(sbeta).c_str(),
                        num(est.value).c_str(), num(est.stderr_).c_str());
            log_info("wrote " + sout + ".csv and " + sout + ".json");
        });
    }

    if (app.got_subcommand(rect)) {
        return dispatch([&] {
            if (rlengths.size() != rcfg.dim)
                throw std::invalid_argument("--lengths must list exactly one "
                                            "edge per dimension");
            for (std::size_t i = 0; i < rlengths.size(); ++i)
                rcfg.lengths[i] = rlengths[i];
            const wlc::OracleValue v = wlc::hrectangle_energy(rcfg);
            std::printf("value = %s\ntail_bound = %s\n", num(v.value).c_str(),
                        num(v.tail_bound).c_str());
            if (!rout.empty())
                write_file(rout, "value,tail_bound\n" + num(v.value) + "," +
                                     num(v.tail_bound) + "\n");
        });
    }

    if (app.got_subcommand(lab)) {
        return dispatch([&] {
            const wlc::Scene scene = wlc::load_scene_file(lscene);
            std::vector<double> betas = lbetas;
            if (betas.empty()) {
                if (lbnodes == 0)
                    throw std::invalid_argument(
                        "give --beta values or --beta-min/--beta-max/"
                        "--beta-nodes");
                betas = log_grid(lbmin, lbmax, lbnodes);
            }
            const std::vector<double> phi =
                wlc::irreducible_spectral_table(scene, lgrid, betas);
            std::string csv = "beta,phi_tilde\n";
            for (std::size_t i = 0; i < betas.size(); ++i) {
                csv += num(betas[i]) + "," + num(phi[i]) + "\n";
                std::printf("phi_tilde(%s) = %s\n", num(betas[i]).c_str(),
                            num(phi[i]).c_str());
            }
            if (!lout.empty()) write_file(lout, csv);
        });
    }

    if (app.got_subcommand(scat)) {
        return dispatch([&] {
            const wlc::PlateStack stack{spos, scoup};
            const wlc::ScatterResult r =
                wlc::irreducible_energy_1d(stack, srtol);
            std::printf("value = %s\nquadrature_error = %s\n",
                        num(r.value).c_str(), num(r.quadrature_error).c_str());
            if (!scout.empty())
                write_file(scout, "value,quadrature_error\n" + num(r.value) +
                                      "," + num(r.quadrature_error) + "\n");
            if (!r.converged)
                throw std::runtime_error("quadrature did not converge to the "
                                         "requested tolerance");
        });
    }

    if (app.got_subcommand(lmin)) {
        return dispatch([&] {
            const wlc::Scene scene = wlc::load_scene_file(mscene);
            const wlc::LminResult r = wlc::estimate_lmin(scene);
            std::printf("lmin = %s%s\n", num(r.value).c_str(),
                        r.approximate ? " (approximate upper bound)" : "");
            if (!mout.empty())
                write_file(mout, "lmin,approximate\n" + num(r.value) + "," +
                                     (r.approximate ? "1" : "0") + "\n");
        });
    }

    log_error("no subcommand selected");
    return 1;
}
