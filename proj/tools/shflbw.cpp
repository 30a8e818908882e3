// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: pruning, SpMM/convolution execution, analytical
// reports and the pipeline simulator, wired through SMX1 containers and
// JSON reports. Every command is reproducible from its manifest.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shflbw/analysis.hpp"
#include "shflbw/container.hpp"
#include "shflbw/pipeline.hpp"
#include "shflbw/pruning.hpp"
#include "shflbw/rng.hpp"
#include "shflbw/spmm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shflbw;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr double kCheckTolerance = 1e-5;

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error("cannot open for digest: " + path.string());
    std::vector<std::uint8_t> bytes(std::size_t(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()),
            std::streamsize(bytes.size()));
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  (unsigned long long)fnv1a64(bytes));
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << text << '\n';
}

// The manifest carries everything needed to re-run the command plus digests
// of what it produced.
void write_manifest(const fs::path& out_path, const std::string& command,
                    const json& inputs, const json& params,
                    std::uint64_t seed,
                    const std::vector<fs::path>& outputs) {
    json digests = json::object();
    for (const auto& p : outputs) digests[p.string()] = file_digest(p);
    const json doc = {
        {"command", command},     {"inputs", inputs}, {"params", params},
        {"seed", seed},           {"tool_version", kToolVersion},
        {"outputs", digests},
    };
    write_text(fs::path(out_path.string() + ".manifest.json"), doc.dump(2));
}

unsigned default_threads() {
    if (const char* env = std::getenv("SHFLBW_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return unsigned(v);
    }
    return 1;
}

TileConfig tile_from_option(const std::vector<std::uint32_t>& tile) {
    TileConfig cfg;
    if (!tile.empty()) {
        if (tile.size() != 3)
            throw BadParams("--tile expects TM,TN,TK");
        cfg.t_m = tile[0];
        cfg.t_n = tile[1];
        cfg.t_k = tile[2];
        const std::uint64_t accs = std::uint64_t(tile[0]) * tile[1];
        if (accs > std::uint32_t(-1))
            throw BadParams("--tile accumulator footprint too large");
        cfg.regfile_size =
            std::max<std::uint32_t>(cfg.regfile_size, std::uint32_t(accs));
    }
    return cfg;
}

struct GenArgs {
    std::uint32_t rows = 0, cols = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen(const GenArgs& a) {
    const auto dense = random_dense(a.rows, a.cols, a.seed);
    write_container(dense, a.out);
    write_manifest(a.out, "gen", json::object(),
                   {{"rows", a.rows}, {"cols", a.cols}}, a.seed, {a.out});
    std::cout << "wrote " << a.out << " (" << a.rows << "x" << a.cols
              << " dense)\n";
    return 0;
}

struct PruneArgs {
    std::string weights;
    std::string pattern = "shflbw";
    double alpha = 0.5;
    double beta_factor = 2.0;
    std::uint32_t v = 1;
    std::vector<std::uint32_t> nm;
    std::uint64_t seed = 0;
    std::uint32_t restarts = 4;
    std::uint32_t kmeans_iters = 50;
    bool json_out = false;
    std::string out;
};

int run_prune(const PruneArgs& a) {
    const auto dense = as_dense(read_container(a.weights));
    const auto scores = importance_scores(dense);
    const PatternKind kind = parse_pattern(a.pattern);

    PruneResult result;
    switch (kind) {
    case PatternKind::Unstructured:
        result.mask = prune_unstructured(scores, a.alpha);
        break;
    case PatternKind::VectorWise:
        result.mask = prune_vectorwise(scores, a.v, a.alpha);
        break;
    case PatternKind::BlockWise:
        result.mask = prune_blockwise(scores, a.v, a.alpha);
        break;
    case PatternKind::Balanced:
        if (a.nm.size() != 2) throw BadParams("balanced needs --nm n,m");
        result.mask = prune_balanced(scores, a.nm[0], a.nm[1]);
        break;
    case PatternKind::ShflBW: {
        PruneConfig cfg{a.alpha, a.beta_factor, a.v, a.kmeans_iters, a.seed,
                        a.restarts};
        result = prune_shflbw(scores, cfg);
        break;
    }
    }
    if (result.permutation.empty()) {
        result.permutation.resize(dense.rows);
        for (std::uint32_t r = 0; r < dense.rows; ++r)
            result.permutation[r] = r;
        result.kept_score = kept_score(scores, result.mask);
    }

    write_container(result.mask, a.out);
    const double alpha = kind == PatternKind::Balanced
                             ? double(a.nm[0]) / double(a.nm[1])
                             : a.alpha;
    const double beta =
        kind == PatternKind::ShflBW ? std::min(1.0, a.beta_factor * a.alpha)
                                    : alpha;
    json sidecar = {
        {"pattern", std::string(pattern_name(kind))},
        {"alpha", alpha},
        {"beta", beta},
        {"V", a.v},
        {"seed", a.seed},
        {"kept_score", result.kept_score},
        {"density", result.mask.density()},
        {"permutation", result.permutation},
    };
    if (kind == PatternKind::Balanced) sidecar["nm"] = a.nm;
    const fs::path meta_path = a.out + ".meta.json";
    write_text(meta_path, sidecar.dump(2));

    write_manifest(a.out, "prune", {{"weights", a.weights}},
                   {{"pattern", a.pattern},
                    {"alpha", a.alpha},
                    {"beta_factor", a.beta_factor},
                    {"V", a.v},
                    {"nm", a.nm},
                    {"restarts", a.restarts},
                    {"kmeans_iters", a.kmeans_iters}},
                   a.seed, {a.out, meta_path});

    if (a.json_out) {
        std::cout << json{{"kept_score", result.kept_score},
                          {"density", result.mask.density()}}
                         .dump(2)
                  << '\n';
    } else {
        std::cout << "kept_score " << result.kept_score << "\n"
                  << "density    " << result.mask.density() << "\n";
    }
    return 0;
}

struct CompressArgs {
    std::string weights, mask, out;
    std::uint32_t v = 1;
};

int run_compress(const CompressArgs& a) {
    const auto dense = as_dense(read_container(a.weights));
    const auto mask = as_mask(read_container(a.mask));
    const auto sparse = compress_shflbw(dense, mask, a.v);
    write_container(sparse, a.out);
    write_manifest(a.out, "compress",
                   {{"weights", a.weights}, {"mask", a.mask}},
                   {{"V", a.v}}, 0, {a.out});
    std::cout << "wrote " << a.out << " (" << sparse.core.group_count()
              << " groups of " << a.v << " rows)\n";
    return 0;
}

struct SpmmArgs {
    std::string sparse, dense, out;
    std::vector<std::uint32_t> tile;
    unsigned threads = 1;
    bool check = false;
    bool json_out = false;
};

int run_spmm(const SpmmArgs& a) {
    const auto sparse = as_shflbw(read_container(a.sparse));
    const auto dense = as_dense(read_container(a.dense));
    const TileConfig cfg = tile_from_option(a.tile);

    const auto c = spmm_execute(sparse, dense, cfg, a.threads);
    write_container(c, a.out);
    write_manifest(a.out, "spmm",
                   {{"sparse", a.sparse}, {"dense", a.dense}},
                   {{"tile", {cfg.t_m, cfg.t_n, cfg.t_k}},
                    {"threads", a.threads},
                    {"check", a.check}},
                   0, {a.out});

    double err = 0.0;
    if (a.check)
        err = relative_frobenius_error(
            c, spmm_dense_oracle(decompress(sparse), dense));

    if (a.json_out) {
        json doc = {{"rows", c.rows}, {"cols", c.cols}};
        if (a.check) doc["relative_frobenius_error"] = err;
        std::cout << doc.dump(2) << '\n';
    } else {
        std::cout << "wrote " << a.out << " (" << c.rows << "x" << c.cols
                  << ")\n";
        if (a.check)
            std::cout << "relative Frobenius error vs dense oracle: " << err
                      << "\n";
    }
    return a.check && err > kCheckTolerance ? 1 : 0;
}

struct ConvArgs {
    std::string weights, input, out;
    std::uint32_t height = 0, width = 0, batch = 1;
    std::uint32_t r = 1, s = 1, stride = 1, pad = 0;
    std::vector<std::uint32_t> tile;
    unsigned threads = 1;
    bool check = false;
    bool json_out = false;
};

// Direct convolution used by --check; deliberately not the executor's path.
Tensor4 conv_reference(const DenseMatrix& w_dense, const Tensor4& in,
                       const ConvGeometry& geo) {
    const auto [p_out, q_out] = conv_output_size(in, geo);
    Tensor4 out(w_dense.rows, p_out, q_out, in.n);
    for (std::uint32_t f = 0; f < w_dense.rows; ++f)
        for (std::uint32_t p = 0; p < p_out; ++p)
            for (std::uint32_t q = 0; q < q_out; ++q)
                for (std::uint32_t ni = 0; ni < in.n; ++ni) {
                    double acc = 0.0;
                    for (std::uint32_t ci = 0; ci < in.c; ++ci)
                        for (std::uint32_t fr = 0; fr < geo.r; ++fr)
                            for (std::uint32_t fs = 0; fs < geo.s; ++fs) {
                                const std::int64_t hi =
                                    std::int64_t(p) * geo.stride + fr -
                                    geo.pad;
                                const std::int64_t wi =
                                    std::int64_t(q) * geo.stride + fs -
                                    geo.pad;
                                if (hi < 0 || hi >= in.h || wi < 0 ||
                                    wi >= in.w)
                                    continue;
                                acc += double(w_dense.at(
                                           f, (ci * geo.r + fr) * geo.s +
                                                  fs)) *
                                       double(in.at(ci, std::uint32_t(hi),
                                                    std::uint32_t(wi), ni));
                            }
                    out.at(f, p, q, ni) = float(acc);
                }
    return out;
}

int run_conv(const ConvArgs& a) {
    const auto weights = as_shflbw(read_container(a.weights));
    const auto flat = as_dense(read_container(a.input));
    if (std::size_t(flat.cols) !=
        std::size_t(a.height) * a.width * a.batch)
        throw BadGeometry("input columns != H*W*N");
    Tensor4 input(flat.rows, a.height, a.width, a.batch);
    input.values = flat.values;

    const ConvGeometry geo{a.r, a.s, a.stride, a.pad};
    const TileConfig cfg = tile_from_option(a.tile);
    const auto out = conv2d(weights, input, geo, cfg, a.threads);

    DenseMatrix out_mat(out.c, out.h * out.w * out.n, out.values);
    write_container(out_mat, a.out);
    write_manifest(a.out, "conv",
                   {{"weights", a.weights}, {"input", a.input}},
                   {{"height", a.height},
                    {"width", a.width},
                    {"batch", a.batch},
                    {"r", a.r},
                    {"s", a.s},
                    {"stride", a.stride},
                    {"pad", a.pad},
                    {"threads", a.threads}},
                   0, {a.out});

    double err = 0.0;
    if (a.check) {
        const auto want = conv_reference(decompress(weights), input, geo);
        DenseMatrix want_mat(want.c, want.h * want.w * want.n, want.values);
        err = relative_frobenius_error(out_mat, want_mat);
    }

    if (a.json_out) {
        json doc = {{"K_f", out.c}, {"P", out.h}, {"Q", out.w},
                    {"N", out.n}};
        if (a.check) doc["relative_frobenius_error"] = err;
        std::cout << doc.dump(2) << '\n';
    } else {
        std::cout << "wrote " << a.out << " (K_f=" << out.c << " P=" << out.h
                  << " Q=" << out.w << " N=" << out.n << ")\n";
        if (a.check)
            std::cout << "relative Frobenius error vs direct conv: " << err
                      << "\n";
    }
    return a.check && err > kCheckTolerance ? 1 : 0;
}

struct AnalyzeArgs {
    std::string mode;
    std::string pattern = "shfl_bw";
    double alpha = 1.0;
    std::uint32_t v = 0;
    std::uint64_t m = 0;
    std::uint32_t regfile = 0;
    std::string profile = "reference-A100-like";
    std::string profile_file;
    bool json_out = false;
};

HardwareModel resolve_hw(const AnalyzeArgs& a) {
    HardwareModel hw;
    if (!a.profile_file.empty()) {
        hw = load_profile_json(a.profile_file);
    } else {
        const auto* p = find_profile(a.profile);
        if (!p) throw BadParams("unknown profile: " + a.profile);
        hw = p->model;
    }
    if (a.regfile) hw.regfile_size = a.regfile;
    return hw;
}

int run_analyze(const AnalyzeArgs& a) {
    if (a.mode == "intensity") {
        const auto rep =
            intensity_report(parse_pattern(a.pattern), a.alpha, a.v,
                             resolve_hw(a));
        if (a.json_out) {
            std::cout << intensity_report_json(rep) << '\n';
        } else {
            std::cout << "pattern          " << rep.pattern << "\n"
                      << "alpha            " << rep.alpha << "\n"
                      << "V                " << rep.v << "\n"
                      << "reuse            " << rep.reuse_flop_per_byte
                      << " flop/byte\n"
                      << "dense reuse      " << rep.reuse_dense_flop_per_byte
                      << " flop/byte\n"
                      << "ratio to dense   " << rep.ratio_to_dense << "\n"
                      << "T_opt            " << rep.tile_opt << "\n"
                      << "tile limited     "
                      << (rep.tile_limited ? "yes" : "no") << "\n";
        }
        return 0;
    }
    if (a.mode == "flexibility") {
        if (a.m == 0 || a.v == 0)
            throw BadParams("flexibility needs --M and --V");
        const double gain = flexibility_log_gain(a.m, a.v);
        if (a.json_out)
            std::cout << json{{"M", a.m}, {"V", a.v}, {"log_gain", gain}}
                             .dump(2)
                      << '\n';
        else
            std::cout << "ln candidate-space gain " << gain << "\n";
        return 0;
    }
    if (a.mode == "required-reuse") {
        const auto hw = resolve_hw(a);
        const double macs = required_reuse(hw);
        if (a.json_out)
            std::cout << json{{"required_macs_per_value", macs}}.dump(2)
                      << '\n';
        else
            std::cout << "required MACs per loaded value " << macs << "\n";
        return 0;
    }
    throw BadParams("unknown analyze mode: " + a.mode);
}

struct SimulateArgs {
    std::int64_t total_steps = 0;
    std::uint32_t pipe_stage = 2;
    std::uint32_t meta_prefetch = 4;
    std::string order = "load_then_compute";
    std::int64_t lead = 0;
    std::string out;
    bool json_out = false;
};

int run_simulate(const SimulateArgs& a) {
    TileConfig cfg;
    cfg.pipe_stage = a.pipe_stage;
    cfg.meta_prefetch_stage = a.meta_prefetch;
    const auto trace = pipeline_simulate(a.total_steps, cfg,
                                         parse_iteration_order(a.order),
                                         a.lead);
    const auto doc = trace_to_json(trace);
    if (!a.out.empty()) {
        write_text(a.out, doc);
        write_manifest(a.out, "simulate", json::object(),
                       {{"total_steps", a.total_steps},
                        {"pipe_stage", a.pipe_stage},
                        {"meta_prefetch", a.meta_prefetch},
                        {"order", a.order},
                        {"lead", trace.lead}},
                       0, {a.out});
    }
    if (a.json_out) {
        std::cout << doc << '\n';
    } else {
        std::cout << "meta_bulk_loads " << trace.meta_bulk_loads << "\n"
                  << "stitches        " << trace.stitches << "\n"
                  << "mmas            " << trace.mmas << "\n"
                  << "hazards         " << trace.hazards.size() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shfl-BW sparsity toolkit: pattern-search pruning, sparse "
                 "formats, a tiled SpMM/conv reference executor and "
                 "analytical models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate seeded dense weights");
    cmd_gen->add_option("--rows", gen.rows)->required();
    cmd_gen->add_option("--cols", gen.cols)->required();
    cmd_gen->add_option("--seed", gen.seed);
    cmd_gen->add_option("-o,--out", gen.out)->required();

    PruneArgs prune;
    auto* cmd_prune =
        app.add_subcommand("prune", "prune weights to a sparsity pattern");
    cmd_prune->add_option("--weights", prune.weights)->required();
    cmd_prune
        ->add_option("--pattern", prune.pattern,
                     "unstructured|vw|bw|shflbw|balanced")
        ->required();
    cmd_prune->add_option("--alpha", prune.alpha, "target non-zero ratio");
    cmd_prune->add_option("--V", prune.v, "group/block size");
    cmd_prune->add_option("--nm", prune.nm, "balanced n,m")->delimiter(',');
    cmd_prune->add_option("--seed", prune.seed);
    cmd_prune->add_option("--beta-factor", prune.beta_factor);
    cmd_prune->add_option("--restarts", prune.restarts);
    cmd_prune->add_option("--kmeans-iters", prune.kmeans_iters);
    cmd_prune->add_flag("--json", prune.json_out);
    cmd_prune->add_option("-o,--out", prune.out)->required();

    CompressArgs compress;
    auto* cmd_compress = app.add_subcommand(
        "compress", "pack weights + mask into a shfl-bw container");
    cmd_compress->add_option("--weights", compress.weights)->required();
    cmd_compress->add_option("--mask", compress.mask)->required();
    cmd_compress->add_option("--V", compress.v)->required();
    cmd_compress->add_option("-o,--out", compress.out)->required();

    SpmmArgs spmm;
    spmm.threads = default_threads();
    auto* cmd_spmm = app.add_subcommand("spmm", "sparse x dense product");
    cmd_spmm->add_option("--sparse", spmm.sparse)->required();
    cmd_spmm->add_option("--dense", spmm.dense)->required();
    cmd_spmm->add_option("--tile", spmm.tile, "TM,TN,TK")->delimiter(',');
    cmd_spmm->add_option("--threads", spmm.threads);
    cmd_spmm->add_flag("--check", spmm.check,
                       "compare against the dense oracle");
    cmd_spmm->add_flag("--json", spmm.json_out);
    cmd_spmm->add_option("-o,--out", spmm.out)->required();

    ConvArgs conv;
    conv.threads = default_threads();
    auto* cmd_conv =
        app.add_subcommand("conv", "implicit-GEMM 2-D convolution");
    cmd_conv->add_option("--weights", conv.weights)->required();
    cmd_conv->add_option("--input", conv.input,
                         "dense container, C x (H*W*N)")
        ->required();
    cmd_conv->add_option("--height", conv.height)->required();
    cmd_conv->add_option("--width", conv.width)->required();
    cmd_conv->add_option("--batch", conv.batch);
    cmd_conv->add_option("--r", conv.r)->required();
    cmd_conv->add_option("--s", conv.s)->required();
    cmd_conv->add_option("--stride", conv.stride);
    cmd_conv->add_option("--pad", conv.pad);
    cmd_conv->add_option("--tile", conv.tile, "TM,TN,TK")->delimiter(',');
    cmd_conv->add_option("--threads", conv.threads);
    cmd_conv->add_flag("--check", conv.check,
                       "compare against a direct convolution");
    cmd_conv->add_flag("--json", conv.json_out);
    cmd_conv->add_option("-o,--out", conv.out)->required();

    AnalyzeArgs analyze;
    auto* cmd_analyze =
        app.add_subcommand("analyze", "analytical intensity/flexibility "
                                      "models");
    cmd_analyze
        ->add_option("--mode", analyze.mode,
                     "intensity|flexibility|required-reuse")
        ->required();
    cmd_analyze->add_option("--pattern", analyze.pattern);
    cmd_analyze->add_option("--alpha", analyze.alpha);
    cmd_analyze->add_option("--V", analyze.v);
    cmd_analyze->add_option("--M", analyze.m);
    cmd_analyze->add_option("--regfile", analyze.regfile);
    cmd_analyze->add_option("--profile", analyze.profile);
    cmd_analyze->add_option("--profile-file", analyze.profile_file);
    cmd_analyze->add_flag("--json", analyze.json_out);

    SimulateArgs simulate;
    auto* cmd_simulate =
        app.add_subcommand("simulate", "prefetch pipeline schedule");
    cmd_simulate->add_option("--total-steps", simulate.total_steps)
        ->required();
    cmd_simulate->add_option("--pipe-stage", simulate.pipe_stage);
    cmd_simulate->add_option("--meta-prefetch", simulate.meta_prefetch);
    cmd_simulate->add_option("--order", simulate.order,
                             "load_then_compute|compute_then_load");
    cmd_simulate->add_option("--lead", simulate.lead,
                             "compute lag behind loads; 0 = PipeStage+1");
    cmd_simulate->add_option("-o,--out", simulate.out, "trace JSON path");
    cmd_simulate->add_flag("--json", simulate.json_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_gen->parsed()) return run_gen(gen);
        if (cmd_prune->parsed()) return run_prune(prune);
        if (cmd_compress->parsed()) return run_compress(compress);
        if (cmd_spmm->parsed()) return run_spmm(spmm);
        if (cmd_conv->parsed()) return run_conv(conv);
        if (cmd_analyze->parsed()) return run_analyze(analyze);
        if (cmd_simulate->parsed()) return run_simulate(simulate);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
