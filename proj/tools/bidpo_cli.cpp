// Command-line front end: datagen, pretrain, train, eval, ablate, sample.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "bidpo/bidpo.hpp"

namespace fs = std::filesystem;
using namespace bidpo;

namespace {

std::vector<Dimension> parse_dims(const std::vector<std::string>& names) {
    if (names.empty()) return {kAllDimensions.begin(), kAllDimensions.end()};
    std::vector<Dimension> out;
    for (const auto& n : names) out.push_back(parse_dimension_name(n));
    return out;
}

nlohmann::json load_json(const fs::path& p) {
    try {
        return nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(FormatError::Kind::malformed_record, p.string() + ": " + e.what());
    }
}

// one caption object per line; blank lines are skipped
std::vector<Caption> load_prompts(const fs::path& p) {
    std::vector<Caption> out;
    std::istringstream is(read_file(p));
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(caption_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(FormatError::Kind::malformed_record,
                              p.string() + " line " + std::to_string(n) + ": " + e.what());
        }
        validate(out.back());
    }
    return out;
}

void print_manifest(const DatasetManifest& m) {
    std::cout << "dimension  requested  realized  build_discarded\n";
    for (Dimension d : kAllDimensions) {
        auto i = static_cast<std::size_t>(d);
        if (m.requested[i] == 0) continue;
        std::cout << to_string(d) << "  " << m.requested[i] << "  " << m.realized[i] << "  " << m.build_discarded[i]
                  << "\n";
    }
    std::cout << "filter: kept " << FilterStats::total(m.filter.kept) << ", discarded "
              << FilterStats::total(m.filter.discarded) << ", injected " << FilterStats::total(m.filter.injected) << "\n";
}

void print_card(const std::string& name, const Scorecard& c) {
    std::cout << name << ":";
    for (Dimension d : kAllDimensions)
        if (auto a = c.accuracy(d)) std::cout << " " << to_string(d) << "=" << *a;
    std::cout << " validity=" << c.validity() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bidirectional preference optimization on a toy compositional world"};
    app.require_subcommand(1);

    // datagen
    auto* datagen = app.add_subcommand("datagen", "Generate a preference-pair dataset");
    std::vector<std::string> dg_dims;
    PipelineConfig pc;
    fs::path dg_out;
    datagen->add_option("--dims", dg_dims, "Dimensions to generate (default: all)")->delimiter(',');
    datagen->add_option("--count-per-dim", pc.count_per_dim, "Pairs per dimension")->check(CLI::PositiveNumber);
    datagen->add_option("--total", pc.total, "Total pairs split by the reference mix (overrides --count-per-dim)");
    datagen->add_option("--seed", pc.seed);
    datagen->add_option("--jitter", pc.jitter)->check(CLI::Range(0.0, 0.1));
    datagen->add_option("--corruption-rate", pc.corruption_rate)->check(CLI::Range(0.0, 1.0));
    datagen->add_option("--out", dg_out)->required();

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "Train a base denoiser on grammar renders");
    fs::path pt_config, pt_out, pt_prompts;
    pretrain->add_option("--config", pt_config, "Ablation config (pretrain_* and train.net fields)");
    pretrain->add_option("--exclude-prompts", pt_prompts, "Prompt file whose captions the corpus must avoid");
    pretrain->add_option("--out", pt_out, "Checkpoint path")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Preference-train a denoiser");
    fs::path tr_config, tr_data, tr_out, tr_init;
    std::string tr_method;
    train_cmd->add_option("--config", tr_config, "Run config (JSON)");
    train_cmd->add_option("--data", tr_data, "Dataset file")->required();
    train_cmd->add_option("--method", tr_method, "sft | image_dpo | text_dpo | bidpo | bidpo_region");
    train_cmd->add_option("--init", tr_init, "Starting checkpoint (default: fresh network)");
    train_cmd->add_option("--out", tr_out, "Output directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on held-out prompts");
    fs::path ev_ckpt, ev_prompts, ev_out, ev_config, ev_data;
    int ev_gen = 0, ev_spp = 8;
    std::uint64_t ev_seed = 0;
    std::string ev_format = "json";
    eval_cmd->add_option("--ckpt", ev_ckpt)->required();
    auto* ev_p = eval_cmd->add_option("--prompts", ev_prompts, "Prompt file (one caption JSON per line)");
    auto* ev_g = eval_cmd->add_option("--gen", ev_gen, "Generate this many held-out prompts per dimension");
    ev_p->excludes(ev_g);
    eval_cmd->add_option("--data", ev_data, "Training dataset; prompts must be disjoint from it");
    eval_cmd->add_option("--config", ev_config, "Run config supplying the schedule");
    eval_cmd->add_option("--samples-per-prompt", ev_spp)->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", ev_seed);
    eval_cmd->add_option("--out", ev_out)->required();
    eval_cmd->add_option("--format", ev_format, "json | csv | markdown");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run every method from one base and report");
    fs::path ab_config, ab_data, ab_out, ab_base, ab_prompts;
    int ab_per_dim = 50;
    std::uint64_t ab_prompt_seed = 0;
    ablate->add_option("--config", ab_config, "Ablation config (JSON)");
    ablate->add_option("--data", ab_data)->required();
    ablate->add_option("--base", ab_base, "Base checkpoint (default: pretrain one)");
    ablate->add_option("--prompts", ab_prompts, "Prompt file (default: generated)");
    ablate->add_option("--prompts-per-dim", ab_per_dim)->check(CLI::PositiveNumber);
    ablate->add_option("--prompt-seed", ab_prompt_seed);
    ablate->add_option("--out", ab_out)->required();

    // sample
    auto* sample = app.add_subcommand("sample", "Write PNG samples of a checkpoint");
    fs::path sm_ckpt, sm_prompts, sm_out, sm_config;
    int sm_n = 4;
    std::uint64_t sm_seed = 0;
    sample->add_option("--ckpt", sm_ckpt)->required();
    sample->add_option("--prompts", sm_prompts)->required();
    sample->add_option("--config", sm_config, "Run config supplying the schedule");
    sample->add_option("-n", sm_n, "Samples per prompt")->check(CLI::PositiveNumber);
    sample->add_option("--seed", sm_seed);
    sample->add_option("--out", sm_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (datagen->parsed()) {
            pc.dims = parse_dims(dg_dims);
            auto res = run_pipeline(pc);
            write_dataset(res.pairs, res.manifest, dg_out, to_json(pc));
            print_manifest(res.manifest);
            std::cout << "wrote " << res.pairs.size() << " pairs to " << dg_out << "\n";
            return 0;
        }
        if (pretrain->parsed()) {
            AblationConfig cfg = pt_config.empty() ? AblationConfig{} : ablation_config_from_json(load_json(pt_config));
            std::set<std::string> exclude;
            if (!pt_prompts.empty())
                for (const auto& p : load_prompts(pt_prompts)) exclude.insert(content_key(p));
            auto base = pretrain_base<float>(cfg, exclude);
            save_checkpoint(base, pt_out);
            std::cout << "wrote " << pt_out << " (checksum " << params_checksum(base) << ")\n";
            return 0;
        }
        if (train_cmd->parsed()) {
            TrainConfig cfg = tr_config.empty() ? TrainConfig{} : load_train_config(tr_config);
            if (!tr_method.empty()) cfg.method = parse_method(tr_method);
            auto data = read_dataset(tr_data);
            std::optional<DenoiserParams<float>> init;
            if (!tr_init.empty()) {
                init = load_checkpoint<float>(tr_init);
                cfg.net = init->config;
            }
            auto res = train<float>(cfg, data.pairs, init);
            fs::create_directories(tr_out);
            save_checkpoint(res.params, tr_out / "model.ckpt");
            atomic_write(tr_out / "metrics.jsonl", metrics_jsonl(res.log));
            atomic_write(tr_out / "config.json", to_json(cfg).dump(2) + "\n");
            const auto& last = res.log.steps.empty() ? StepRecord{} : res.log.steps.back();
            std::cout << to_string(cfg.method) << ": " << cfg.steps << " steps, final loss " << last.loss
                      << ", checksum " << params_checksum(res.params) << "\n";
            return 0;
        }
        if (eval_cmd->parsed()) {
            if (ev_prompts.empty() && ev_gen <= 0) throw InvalidRange("eval: give --prompts FILE or --gen N");
            auto params = load_checkpoint<float>(ev_ckpt);
            TrainConfig cfg = ev_config.empty() ? TrainConfig{} : load_train_config(ev_config);
            std::set<std::string> keys;
            if (!ev_data.empty()) keys = caption_keys(read_dataset(ev_data).pairs);
            auto prompts = !ev_prompts.empty()
                               ? load_prompts(ev_prompts)
                               : held_out_prompts({kAllDimensions.begin(), kAllDimensions.end()}, ev_gen, ev_seed, keys);
            AblationReport rep;
            rep.prompts = prompts;
            rep.eval_seed = ev_seed;
            rep.samples_per_prompt = ev_spp;
            rep.base_checksum = params_checksum(params);
            AblationRow row;
            row.method = ev_ckpt.stem().string();
            row.params_checksum = rep.base_checksum;
            row.card = evaluate(params, prompts, ev_spp, cfg.schedule.build(), ev_seed, keys.empty() ? nullptr : &keys);
            row.ok = true;
            rep.rows.push_back(row);
            emit_report(rep, parse_report_format(ev_format), ev_out);
            print_card(row.method, row.card);
            return 0;
        }
        if (ablate->parsed()) {
            AblationConfig cfg = ab_config.empty() ? AblationConfig{} : ablation_config_from_json(load_json(ab_config));
            auto data = read_dataset(ab_data);
            auto keys = caption_keys(data.pairs);
            auto prompts = !ab_prompts.empty() ? load_prompts(ab_prompts)
                                               : held_out_prompts({kAllDimensions.begin(), kAllDimensions.end()},
                                                                  ab_per_dim, ab_prompt_seed, keys);
            std::optional<DenoiserParams<float>> base;
            if (!ab_base.empty()) base = load_checkpoint<float>(ab_base);
            auto rep = run_ablation<float>(cfg, data.pairs, prompts, ab_out, base);
            emit_report(rep, ReportFormat::json, ab_out / "report.json");
            emit_report(rep, ReportFormat::csv, ab_out / "report.csv");
            emit_report(rep, ReportFormat::markdown, ab_out / "report.md");
            for (const auto& r : rep.rows) {
                if (r.ok) print_card(r.method, r.card);
                else std::cout << r.method << ": FAILED: " << r.error << "\n";
            }
            return rep.any_failed() ? 1 : 0;
        }
        if (sample->parsed()) {
            auto params = load_checkpoint<float>(sm_ckpt);
            TrainConfig cfg = sm_config.empty() ? TrainConfig{} : load_train_config(sm_config);
            auto prompts = load_prompts(sm_prompts);
            std::vector<SampleRequest> reqs;
            for (std::size_t i = 0; i < prompts.size(); ++i)
                for (int s = 0; s < sm_n; ++s) reqs.push_back({prompts[i], eval_sample_seed(sm_seed, i, s, sm_n)});
            auto imgs = model_sampler(params, cfg.schedule.build())(reqs);
            fs::create_directories(sm_out);
            for (std::size_t k = 0; k < imgs.size(); ++k) {
                auto name = "p" + std::to_string(k / static_cast<std::size_t>(sm_n)) + "_s" +
                            std::to_string(k % static_cast<std::size_t>(sm_n)) + ".png";
                write_png(imgs[k], (sm_out / name).string());
                std::cout << name << "  " << to_text(reqs[k].caption) << "  pass="
                          << vqa_check(imgs[k], reqs[k].caption).pass << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
