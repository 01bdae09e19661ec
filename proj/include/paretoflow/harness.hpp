#pragma once

// Experiment orchestration: JSON run configuration with full defaulting,
// dataset/checkpoint/result persistence, and the gen-data / train / optimize
// / ablate / report commands.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "paretoflow/benchmarks.hpp"
#include "paretoflow/flow.hpp"
#include "paretoflow/moo.hpp"
#include "paretoflow/sampler.hpp"
#include "paretoflow/weights.hpp"

namespace paretoflow {

namespace fs = std::filesystem;

struct PredictorTrainConfig {
    std::vector<int> hidden_sizes = {256, 256};
    int epochs = 200;
    int batch_size = 128;
    AdamConfig adam;
};

struct EvalConfig {
    std::vector<int> percentiles = {100, 50};
    std::int64_t mc_samples = 1000000;
    std::uint64_t mc_seed = 0;
};

struct RunConfig {
    std::string problem = "zdt1";
    std::uint64_t seed = 0;
    std::string out_dir = "run";
    // dataset
    Eigen::Index data_n = 5000;
    std::uint64_t data_seed = 0;  // 0: derived from the global seed
    std::string data_sampler = "uniform";
    PredictorTrainConfig predictor;
    FlowTrainConfig flow;
    SamplerConfig sampler;
    EvalConfig eval;

    std::uint64_t effective_data_seed() const {
        return data_seed ? data_seed : mix_seed(seed, 0x64617461ULL);
    }

    Json to_json() const {
        Json j;
        j["problem"] = problem;
        j["seed"] = seed;
        j["out_dir"] = out_dir;
        j["data"] = {{"n", data_n}, {"seed", data_seed}, {"sampler", data_sampler}};
        j["predictor"] = {{"hidden", predictor.hidden_sizes},
                          {"epochs", predictor.epochs},
                          {"batch_size", predictor.batch_size},
                          {"lr", predictor.adam.learning_rate},
                          {"lr_decay", predictor.adam.lr_decay}};
        j["flow"] = {{"hidden", flow.hidden_sizes},
                     {"epochs", flow.epochs},
                     {"batch_size", flow.batch_size},
                     {"patience", flow.patience},
                     {"validation_fraction", flow.validation_fraction},
                     {"lr", flow.adam.learning_rate},
                     {"lr_decay", flow.adam.lr_decay},
                     {"time_embedding", to_string(flow.embedding.mode)},
                     {"embedding_dim", flow.embedding.dim}};
        j["sampler"] = {{"steps", sampler.steps},
                        {"gamma", sampler.gamma},
                        {"gamma_threshold", sampler.gamma_threshold},
                        {"noise_g", sampler.noise_g},
                        {"offspring", sampler.offspring},
                        {"neighbors_k", sampler.neighbors_k},
                        {"target_candidates", sampler.target_candidates},
                        {"gradient_mode", sampler.gradient_mode == GradientMode::full_chain
                                              ? "full-chain"
                                              : "stop-gradient"},
                        {"variant", to_string(sampler.variant)},
                        {"threads", sampler.threads}};
        j["eval"] = {{"percentiles", eval.percentiles},
                     {"mc_samples", eval.mc_samples},
                     {"mc_seed", eval.mc_seed}};
        return j;
    }

    static RunConfig from_json(const Json& j) {
        RunConfig c;
        c.problem = j.value("problem", c.problem);
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
        if (j.contains("data")) {
            const Json& d = j.at("data");
            c.data_n = d.value("n", c.data_n);
            c.data_seed = d.value("seed", c.data_seed);
            c.data_sampler = d.value("sampler", c.data_sampler);
        }
        if (j.contains("predictor")) {
            const Json& p = j.at("predictor");
            c.predictor.hidden_sizes = p.value("hidden", c.predictor.hidden_sizes);
            c.predictor.epochs = p.value("epochs", c.predictor.epochs);
            c.predictor.batch_size = p.value("batch_size", c.predictor.batch_size);
            c.predictor.adam.learning_rate = p.value("lr", c.predictor.adam.learning_rate);
            c.predictor.adam.lr_decay = p.value("lr_decay", c.predictor.adam.lr_decay);
        }
        if (j.contains("flow")) {
            const Json& f = j.at("flow");
            c.flow.hidden_sizes = f.value("hidden", c.flow.hidden_sizes);
            c.flow.epochs = f.value("epochs", c.flow.epochs);
            c.flow.batch_size = f.value("batch_size", c.flow.batch_size);
            c.flow.patience = f.value("patience", c.flow.patience);
            c.flow.validation_fraction = f.value("validation_fraction", c.flow.validation_fraction);
            c.flow.adam.learning_rate = f.value("lr", c.flow.adam.learning_rate);
            c.flow.adam.lr_decay = f.value("lr_decay", c.flow.adam.lr_decay);
            c.flow.embedding.mode = time_embedding_from_string(
                f.value("time_embedding", to_string(c.flow.embedding.mode)));
            c.flow.embedding.dim = f.value("embedding_dim", c.flow.embedding.dim);
        }
        if (j.contains("sampler")) {
            const Json& s = j.at("sampler");
            c.sampler.steps = s.value("steps", c.sampler.steps);
            c.sampler.gamma = s.value("gamma", c.sampler.gamma);
            c.sampler.gamma_threshold = s.value("gamma_threshold", c.sampler.gamma_threshold);
            c.sampler.noise_g = s.value("noise_g", c.sampler.noise_g);
            c.sampler.offspring = s.value("offspring", c.sampler.offspring);
            c.sampler.neighbors_k = s.value("neighbors_k", c.sampler.neighbors_k);
            c.sampler.target_candidates = s.value("target_candidates", c.sampler.target_candidates);
            const std::string gm = s.value("gradient_mode", std::string("full-chain"));
            if (gm == "full-chain")
                c.sampler.gradient_mode = GradientMode::full_chain;
            else if (gm == "stop-gradient")
                c.sampler.gradient_mode = GradientMode::stop_gradient;
            else
                throw std::invalid_argument("unknown gradient_mode: " + gm);
            c.sampler.variant = variant_from_string(s.value("variant", std::string("full")));
            c.sampler.threads = s.value("threads", c.sampler.threads);
        }
        if (j.contains("eval")) {
            const Json& e = j.at("eval");
            c.eval.percentiles = e.value("percentiles", c.eval.percentiles);
            c.eval.mc_samples = e.value("mc_samples", c.eval.mc_samples);
            c.eval.mc_seed = e.value("mc_seed", c.eval.mc_seed);
        }
        return c;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config: " + path);
        return from_json(Json::parse(in));
    }
};

// FNV-1a over the canonical config dump; embedded in every result file.
inline std::string config_hash(const RunConfig& cfg) {
    const std::string s = cfg.to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string dataset_csv_path(const RunConfig& cfg) { return cfg.out_dir + "/dataset.csv"; }
inline std::string dataset_meta_path(const RunConfig& cfg) {
    return cfg.out_dir + "/dataset.meta.json";
}
inline std::string predictor_ckpt_path(const RunConfig& cfg, int i) {
    return cfg.out_dir + "/predictor_" + std::to_string(i) + ".ckpt";
}
inline std::string flow_ckpt_path(const RunConfig& cfg) { return cfg.out_dir + "/flow.ckpt"; }

// Reference point: per-objective dataset maximum pushed 1.1x away from the
// ideal point, in raw objective units.
inline Vector reference_point(const Matrix& labels) {
    Vector ideal = labels.colwise().minCoeff().transpose();
    Vector worst = labels.colwise().maxCoeff().transpose();
    return ideal + 1.1 * (worst - ideal);
}

// HV of the best-256 subset of the offline dataset under non-dominated
// ranking; the D(best) baseline.
inline double best_offline_hv(const Matrix& labels, const Vector& ref, int k,
                              const EvalConfig& eval = EvalConfig{}) {
    std::vector<int> order = rank_order(labels);
    const int take = std::min<int>(k, static_cast<int>(order.size()));
    Matrix best(take, labels.cols());
    for (int i = 0; i < take; ++i) best.row(i) = labels.row(order[i]);
    return hypervolume_auto(best, ref, MonteCarloHv{eval.mc_samples, eval.mc_seed});
}

inline void cmd_gen_data(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    ProblemSpec spec = make_problem(cfg.problem);
    OfflineDataset ds = generate_offline_dataset(spec, cfg.data_n, cfg.effective_data_seed(),
                                                 sampler_from_string(cfg.data_sampler));
    save_dataset(ds, dataset_csv_path(cfg), dataset_meta_path(cfg));
    std::ofstream cout_(cfg.out_dir + "/config.json");
    cout_ << cfg.to_json().dump(2) << "\n";
}

struct TrainedModels {
    Predictors predictors;
    FlowModel flow;
};

inline TrainedModels train_models(const RunConfig& cfg, const OfflineDataset& ds,
                                  std::vector<std::vector<double>>* predictor_histories = nullptr,
                                  FlowTrainResult* flow_history = nullptr) {
    const Matrix Xn = ds.x_stats.normalize(ds.designs);
    const Matrix Yn = ds.y_stats.normalize(ds.labels);

    TrainedModels models;
    for (int i = 0; i < ds.m(); ++i) {
        std::vector<int> sizes;
        sizes.push_back(ds.d());
        for (int h : cfg.predictor.hidden_sizes) sizes.push_back(h);
        sizes.push_back(1);
        const std::uint64_t init_seed = mix_seed(cfg.seed, 0x70726564ULL, i);
        DenseNetwork net = DenseNetwork::make(sizes, Activation::relu, init_seed);
        TrainResult tr = train_regressor(net, Xn, Yn.col(i), cfg.predictor.epochs,
                                         cfg.predictor.batch_size, cfg.predictor.adam,
                                         mix_seed(cfg.seed, 0x70747264ULL, i));
        if (predictor_histories) predictor_histories->push_back(tr.loss_history);
        models.predictors.nets.push_back(std::move(net));
    }

    models.flow = make_flow_model(ds.d(), cfg.flow, mix_seed(cfg.seed, 0x666c6f77ULL));
    FlowTrainResult fr = train_flow(models.flow, Xn, cfg.flow, mix_seed(cfg.seed, 0x66747264ULL));
    if (flow_history) *flow_history = std::move(fr);
    return models;
}

inline void cmd_train(const RunConfig& cfg) {
    if (!fs::exists(dataset_csv_path(cfg)))
        throw std::runtime_error("dataset not found; run gen-data first: " + dataset_csv_path(cfg));
    OfflineDataset ds = load_dataset(dataset_csv_path(cfg), dataset_meta_path(cfg));
    std::vector<std::vector<double>> histories;
    FlowTrainResult flow_history;
    TrainedModels models = train_models(cfg, ds, &histories, &flow_history);

    for (int i = 0; i < ds.m(); ++i) {
        Checkpoint ckpt;
        ckpt.net = models.predictors.nets[i];
        ckpt.meta = {{"role", "predictor"},
                     {"objective", i},
                     {"problem", cfg.problem},
                     {"config", cfg.to_json()},
                     {"loss_history", histories[i]}};
        save_checkpoint(predictor_ckpt_path(cfg, i), ckpt);
    }
    save_flow_checkpoint(flow_ckpt_path(cfg), models.flow,
                         Json{{"role", "flow"},
                              {"problem", cfg.problem},
                              {"config", cfg.to_json()},
                              {"loss_history", flow_history.loss_history},
                              {"validation_history", flow_history.validation_history},
                              {"best_epoch", flow_history.best_epoch}});
}

inline TrainedModels load_models(const RunConfig& cfg, const OfflineDataset& ds) {
    TrainedModels models;
    for (int i = 0; i < ds.m(); ++i) {
        Checkpoint ckpt = load_checkpoint(predictor_ckpt_path(cfg, i));
        if (ckpt.net.input_dim() != ds.d())
            throw std::runtime_error("predictor checkpoint dimension mismatch");
        models.predictors.nets.push_back(std::move(ckpt.net));
    }
    models.flow = load_flow_checkpoint(flow_ckpt_path(cfg));
    if (models.flow.data_dim != ds.d())
        throw std::runtime_error("flow checkpoint dimension mismatch");
    return models;
}

struct RunResult {
    Json result;        // metrics, ref point, config hash
    Matrix designs;     // evaluated candidates, raw units
    Matrix objectives;  // true oracle values
};

inline void write_candidates_csv(const std::string& path, const Matrix& designs,
                                 const Matrix& objectives) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write candidates: " + path);
    for (Eigen::Index j = 0; j < designs.cols(); ++j) out << (j ? "," : "") << "x" << j;
    for (Eigen::Index j = 0; j < objectives.cols(); ++j) out << ",f" << j;
    out << "\n";
    for (Eigen::Index i = 0; i < designs.rows(); ++i) {
        for (Eigen::Index j = 0; j < designs.cols(); ++j)
            out << (j ? "," : "") << detail::format_double(designs(i, j));
        for (Eigen::Index j = 0; j < objectives.cols(); ++j)
            out << "," << detail::format_double(objectives(i, j));
        out << "\n";
    }
}

inline std::pair<Matrix, Matrix> read_candidates_csv(const std::string& path, int d, int m) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open candidates: " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != d + m)
            throw std::runtime_error("candidate row width mismatch in " + path);
        rows.push_back(std::move(row));
    }
    Matrix X(static_cast<Eigen::Index>(rows.size()), d), F(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) X(static_cast<Eigen::Index>(i), j) = rows[i][j];
        for (int j = 0; j < m; ++j) F(static_cast<Eigen::Index>(i), j) = rows[i][d + j];
    }
    return {X, F};
}

inline RunResult cmd_optimize(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    OfflineDataset ds = load_dataset(dataset_csv_path(cfg), dataset_meta_path(cfg));
    ProblemSpec spec = make_problem(cfg.problem);
    if (ds.d() != spec.d || ds.m() != spec.m)
        throw std::runtime_error("dataset dimensions do not match problem " + cfg.problem);
    TrainedModels models = load_models(cfg, ds);

    SamplerConfig scfg = cfg.sampler;
    scfg.seed = scfg.seed ? scfg.seed : mix_seed(cfg.seed, 0x73616d70ULL);
    const int K = scfg.neighbors_k > 0 ? scfg.neighbors_k : ds.m() + 1;
    WeightLattice lattice = make_weight_lattice(ds.m(), scfg.target_candidates, K);

    const Matrix Xn = ds.x_stats.normalize(ds.designs);
    const auto t_sample_start = std::chrono::steady_clock::now();
    SamplerOutput sout =
        run_sampler(models.flow, models.predictors, lattice, Xn, ds.labels, scfg);
    const auto t_sample_end = std::chrono::steady_clock::now();

    // Decode to raw units and evaluate with the true oracle.
    Matrix designs = ds.x_stats.denormalize(sout.final_designs);
    Matrix objectives(designs.rows(), ds.m());
    for (Eigen::Index i = 0; i < designs.rows(); ++i) {
        Vector x = designs.row(i).transpose().cwiseMax(spec.lower).cwiseMin(spec.upper);
        designs.row(i) = x.transpose();
        objectives.row(i) = spec.eval_checked(x).transpose();
    }

    const Vector ref = reference_point(ds.labels);
    MonteCarloHv mc{cfg.eval.mc_samples, cfg.eval.mc_seed};
    Json hv;
    for (int p : cfg.eval.percentiles)
        hv["p" + std::to_string(p)] = percentile_hv(objectives, ref, p, mc);
    const double diversity = pairwise_diversity(objectives);
    const double d_best = best_offline_hv(ds.labels, ref, scfg.target_candidates, cfg.eval);

    RunResult rr;
    rr.designs = designs;
    rr.objectives = objectives;
    rr.result["problem"] = cfg.problem;
    rr.result["config_hash"] = config_hash(cfg);
    rr.result["config"] = cfg.to_json();
    rr.result["hypervolume"] = hv;
    rr.result["pairwise_diversity"] = diversity;
    rr.result["d_best_hv"] = d_best;
    rr.result["reference_point"] =
        std::vector<double>(ref.data(), ref.data() + ref.size());
    rr.result["neighbor_win_fraction"] = sout.neighbor_win_fraction;
    rr.result["clip_policy"] = "normalized designs clipped to [0,1] before decoding";
    const auto t_end = std::chrono::steady_clock::now();
    auto ms = [](auto a, auto b) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(b - a).count();
    };
    rr.result["timings_ms"] = {{"total", ms(t_start, t_end)},
                               {"sampling", ms(t_sample_start, t_sample_end)}};

    fs::create_directories(cfg.out_dir);
    write_candidates_csv(cfg.out_dir + "/candidates.csv", designs, objectives);
    {
        std::ofstream out(cfg.out_dir + "/result.json");
        out << rr.result.dump(2) << "\n";
    }
    {
        std::ofstream out(cfg.out_dir + "/diagnostics.jsonl");
        for (const StepTrace& tr : sout.trace) {
            Json rec{{"step", tr.step},
                     {"t", tr.t},
                     {"mean_weighted_score", tr.mean_weighted_score},
                     {"filter_pass_rate", tr.filter_pass_rate},
                     {"neighbor_win_fraction", tr.neighbor_win_fraction},
                     {"archive_updates", tr.archive_updates},
                     {"archive_hv", tr.archive_hv}};
            out << rec.dump() << "\n";
        }
    }
    {
        std::ofstream out(cfg.out_dir + "/config.json");
        out << cfg.to_json().dump(2) << "\n";
    }
    return rr;
}

// Recompute the stored hypervolumes from the stored rows; fails loudly on
// drift beyond tol or on a config-hash mismatch.
inline void verify_result(const std::string& run_dir, double tol = 1e-9) {
    std::ifstream in(run_dir + "/result.json");
    if (!in) throw std::runtime_error("no result.json in " + run_dir);
    Json result = Json::parse(in);
    RunConfig cfg = RunConfig::from_json(result.at("config"));
    if (config_hash(cfg) != result.at("config_hash").get<std::string>())
        throw std::runtime_error("config hash mismatch in " + run_dir);
    ProblemSpec spec = make_problem(cfg.problem);
    auto [X, F] = read_candidates_csv(run_dir + "/candidates.csv", spec.d, spec.m);
    auto rv = result.at("reference_point").get<std::vector<double>>();
    Vector ref = Eigen::Map<Vector>(rv.data(), static_cast<Eigen::Index>(rv.size()));
    MonteCarloHv mc{cfg.eval.mc_samples, cfg.eval.mc_seed};
    for (int p : cfg.eval.percentiles) {
        const double stored = result.at("hypervolume").at("p" + std::to_string(p)).get<double>();
        const double recomputed = percentile_hv(F, ref, p, mc);
        if (std::abs(stored - recomputed) > tol)
            throw std::runtime_error("stored HV does not re-verify in " + run_dir);
    }
}

// All six variants across the given seeds; one run directory per cell plus a
// Table-style summary. Training is shared across variants within a seed.
inline Json cmd_ablate(const RunConfig& base, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("ablate: need at least one seed");
    const std::vector<AblationVariant> variants = {
        AblationVariant::full,       AblationVariant::equal,    AblationVariant::first,
        AblationVariant::no_local,   AblationVariant::no_neighbor, AblationVariant::no_ps};

    Json table = Json::array();
    std::vector<std::vector<double>> hv100(variants.size());
    std::vector<std::vector<double>> diversity(variants.size());

    for (std::uint64_t seed : seeds) {
        RunConfig cfg = base;
        cfg.seed = seed;
        cfg.out_dir = base.out_dir + "/seed_" + std::to_string(seed);
        if (!fs::exists(dataset_csv_path(cfg))) cmd_gen_data(cfg);
        if (!fs::exists(flow_ckpt_path(cfg))) cmd_train(cfg);
        for (std::size_t v = 0; v < variants.size(); ++v) {
            RunConfig vcfg = cfg;
            vcfg.sampler.variant = variants[v];
            vcfg.out_dir = cfg.out_dir + "/" + to_string(variants[v]);
            // checkpoints live in the seed dir; point the variant run at them
            RunConfig run_cfg = vcfg;
            fs::create_directories(vcfg.out_dir);
            for (const std::string f :
                 {std::string("dataset.csv"), std::string("dataset.meta.json")})
                if (!fs::exists(vcfg.out_dir + "/" + f))
                    fs::copy_file(cfg.out_dir + "/" + f, vcfg.out_dir + "/" + f);
            for (int i = 0; i < make_problem(cfg.problem).m; ++i)
                if (!fs::exists(predictor_ckpt_path(vcfg, i)))
                    fs::copy_file(predictor_ckpt_path(cfg, i), predictor_ckpt_path(vcfg, i));
            if (!fs::exists(flow_ckpt_path(vcfg)))
                fs::copy_file(flow_ckpt_path(cfg), flow_ckpt_path(vcfg));
            RunResult rr = cmd_optimize(run_cfg);
            hv100[v].push_back(rr.result["hypervolume"]["p100"].get<double>());
            diversity[v].push_back(rr.result["pairwise_diversity"].get<double>());
        }
    }

    auto mean_std = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= xs.size();
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var = xs.size() > 1 ? var / (xs.size() - 1) : 0.0;
        return std::make_pair(mean, std::sqrt(var));
    };

    for (std::size_t v = 0; v < variants.size(); ++v) {
        auto [hm, hs] = mean_std(hv100[v]);
        auto [dm, ds_] = mean_std(diversity[v]);
        table.push_back(Json{{"variant", to_string(variants[v])},
                             {"baseline", variants[v] == AblationVariant::full},
                             {"hv100_mean", hm},
                             {"hv100_std", hs},
                             {"diversity_mean", dm},
                             {"diversity_std", ds_},
                             {"hv100_runs", hv100[v]},
                             {"diversity_runs", diversity[v]}});
    }
    Json out{{"problem", base.problem}, {"seeds", seeds}, {"rows", table}};
    fs::create_directories(base.out_dir);
    std::ofstream f(base.out_dir + "/ablation_table.json");
    f << out.dump(2) << "\n";
    std::ofstream csv(base.out_dir + "/ablation_table.csv");
    csv << "variant,hv100_mean,hv100_std,diversity_mean,diversity_std\n";
    for (const auto& row : table)
        csv << row["variant"].get<std::string>() << "," << row["hv100_mean"].get<double>() << ","
            << row["hv100_std"].get<double>() << "," << row["diversity_mean"].get<double>() << ","
            << row["diversity_std"].get<double>() << "\n";
    return out;
}

// Plot-ready exports for one run directory: Pareto-front scatter, the
// archive-HV-vs-step curve, and the reconstruction-loss-vs-t diagnostic.
inline void cmd_report(const std::string& run_dir) {
    std::ifstream rin(run_dir + "/result.json");
    if (!rin) throw std::runtime_error("no result.json in " + run_dir);
    Json result = Json::parse(rin);
    RunConfig cfg = RunConfig::from_json(result.at("config"));
    ProblemSpec spec = make_problem(cfg.problem);
    auto [X, F] = read_candidates_csv(run_dir + "/candidates.csv", spec.d, spec.m);

    {
        std::ofstream out(run_dir + "/front_scatter.csv");
        for (int j = 0; j < spec.m; ++j) out << (j ? "," : "") << "f" << j;
        out << "\n";
        for (Eigen::Index i = 0; i < F.rows(); ++i) {
            for (int j = 0; j < spec.m; ++j) out << (j ? "," : "") << detail::format_double(F(i, j));
            out << "\n";
        }
    }
    {
        std::ifstream din(run_dir + "/diagnostics.jsonl");
        if (!din) throw std::runtime_error("no diagnostics.jsonl in " + run_dir);
        std::ofstream out(run_dir + "/hv_vs_step.csv");
        out << "step,t,archive_hv,archive_updates,filter_pass_rate,neighbor_win_fraction\n";
        std::string line;
        while (std::getline(din, line)) {
            if (line.empty()) continue;
            Json rec = Json::parse(line);
            out << rec["step"].get<int>() << "," << rec["t"].get<double>() << ","
                << detail::format_double(rec["archive_hv"].get<double>()) << ","
                << rec["archive_updates"].get<int>() << ","
                << rec["filter_pass_rate"].get<double>() << ","
                << rec["neighbor_win_fraction"].get<double>() << "\n";
        }
    }
    {
        RunConfig dcfg = cfg;
        dcfg.out_dir = run_dir;
        OfflineDataset ds = load_dataset(dataset_csv_path(dcfg), dataset_meta_path(dcfg));
        FlowModel flow = load_flow_checkpoint(flow_ckpt_path(dcfg));
        Matrix Xn = ds.x_stats.normalize(ds.designs);
        const Eigen::Index probe = std::min<Eigen::Index>(Xn.rows(), 500);
        auto curve = reconstruction_vs_t(flow, Xn.topRows(probe), 20,
                                         mix_seed(cfg.seed, 0x7265636fULL));
        std::ofstream out(run_dir + "/recon_vs_t.csv");
        out << "t,mean_reconstruction_error\n";
        for (auto [t, err] : curve) out << t << "," << detail::format_double(err) << "\n";
    }
}

}  // namespace paretoflow
