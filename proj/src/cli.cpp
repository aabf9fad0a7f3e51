#include "opinion_audit/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/ingest.hpp"
#include "opinion_audit/pipeline.hpp"
#include "opinion_audit/quality.hpp"
#include "opinion_audit/report.hpp"
#include "opinion_audit/synthgen.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out) throw DataError(fmt::format("failed writing {}", path.string()));
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
}

std::vector<double> parse_edges(const std::string& text) {
    std::vector<double> edges;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            edges.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(fmt::format("--bins: \"{}\" is not a number", item));
        }
    }
    return edges;
}

struct DataArgs {
    std::string data;
    std::string manifest;
    std::string format;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--data", data, "Annotations (.jsonl or .csv)")->required();
        cmd->add_option("--manifest", manifest, "Label set and demographic vocabulary (JSON)")->required();
        cmd->add_option("--format", format, "Override input format: jsonl|csv");
    }

    AnnotatedDataset load() const {
        InputFormat fmt_;
        if (format.empty())
            fmt_ = format_from_path(data);
        else if (format == "jsonl")
            fmt_ = InputFormat::jsonl;
        else if (format == "csv")
            fmt_ = InputFormat::csv;
        else
            throw UsageError(fmt::format("unknown --format \"{}\"", format));
        return ingest(fs::path(data), read_manifest(manifest), fmt_);
    }
};

void run_validate(const DataArgs& args, std::ostream& out) {
    const auto ds = args.load();
    const auto mv = majority_vote(ds);
    const auto ties = summarize_ties(mv);
    out << fmt::format("ok: {} samples, {} annotators, {} annotations, {} labels\n", ds.samples().size(),
                       ds.annotators().size(), ds.annotations().size(), ds.label_set().size());
    out << fmt::format("tied samples: {} ({:.1f}% of annotations)\n", ties.tie_samples,
                       100.0 * ties.annotation_fraction);
    out << fmt::format("fingerprint: {}\n", fingerprint(ds));
}

void run_stats(const DataArgs& args, bool per_sample, std::ostream& out) {
    const auto ds = args.load();
    const auto mv = majority_vote(ds);
    const auto profiles = compute_adr(ds, mv);
    const auto quality = annotator_quality(ds);
    const auto ties = summarize_ties(mv);

    std::vector<double> amb;
    std::size_t disputed = 0;
    for (const auto& s : mv) {
        amb.push_back(s.ambiguity);
        if (s.ambiguity > 0.0) ++disputed;
    }
    out << fmt::format("samples {}  annotators {}  annotations {}\n", ds.samples().size(), ds.annotators().size(),
                       ds.annotations().size());
    out << fmt::format("disputed samples {} ({:.1f}%)  mean ambiguity {}  tied samples {}\n", disputed,
                       100.0 * static_cast<double>(disputed) / static_cast<double>(mv.size()),
                       fixed(exact_mean(amb), 4), ties.tie_samples);

    const auto edges = default_bin_edges();
    std::vector<std::size_t> amb_bins(edges.size() - 1, 0), adr_bins(edges.size() - 1, 0);
    for (double a : amb) ++amb_bins[bin_of(a, edges)];
    for (const auto& p : profiles) ++adr_bins[bin_of(p.adr, edges)];
    out << "\nbin            samples(ambiguity)  annotators(adr)\n";
    for (std::size_t b = 0; b + 1 < edges.size(); ++b)
        out << fmt::format("{:<14} {:>18}  {:>15}\n", bin_label(edges, b), amb_bins[b], adr_bins[b]);

    std::vector<std::optional<const QualityScore*>> q(ds.annotators().size());
    for (const auto& s : quality) q[s.annotator] = &s;
    out << "\nannotator      annotations  disagreements     adr  quality\n";
    std::vector<const AnnotatorProfile*> sorted;
    for (const auto& p : profiles) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->annotator_id < b->annotator_id; });
    for (const auto* p : sorted)
        out << fmt::format("{:<14} {:>11}  {:>13}  {:>6}  {:>7}\n", p->annotator_id, p->n_annotations,
                           p->n_disagreements, fixed(p->adr, 4),
                           q[p->annotator] ? fixed((*q[p->annotator])->score, 4) : std::string("-"));

    if (per_sample) {
        out << "\nsample         total  majority  tie  ambiguity\n";
        for (const auto& s : mv)
            out << fmt::format("{:<14} {:>5}  {:<8}  {:<3}  {}\n", ds.samples()[s.sample].id, s.total,
                               ds.label_set()[s.majority_label], s.is_tie ? "yes" : "no", fixed(s.ambiguity, 4));
    }
}

void run_synth(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
    const auto config = synth_config_from_json(read_file(config_path));
    const auto result = generate(config);
    ensure_dir(out_dir);
    std::ostringstream jsonl;
    write_jsonl(result.dataset, jsonl);
    write_file(fs::path(out_dir) / "annotations.jsonl", jsonl.str());
    write_file(fs::path(out_dir) / "manifest.json", manifest_json(manifest_of(result.dataset)));
    write_file(fs::path(out_dir) / "truth.json", truth_to_json(result.truth, result.dataset));
    out << fmt::format("wrote {} annotations over {} samples to {}\n", result.dataset.annotations().size(),
                       result.dataset.samples().size(), out_dir);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Opinion-exclusion unfairness audit for subjective classification models", "opinion-audit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    DataArgs validate_args, stats_args, audit_args;
    auto* validate = app.add_subcommand("validate", "Ingest a dataset and check its invariants");
    validate_args.add_to(validate);

    auto* stats = app.add_subcommand("stats", "Majority vote, disagreement, ambiguity and quality tables");
    stats_args.add_to(stats);
    bool per_sample = false;
    stats->add_flag("--samples", per_sample, "Also print the per-sample table");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted opinion clusters");
    std::string synth_config, synth_out;
    synth->add_option("--config", synth_config, "Generator config (JSON)")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    auto* audit = app.add_subcommand("audit", "Train and evaluate models, write report.json and heatmap.svg");
    audit_args.add_to(audit);
    std::vector<std::string> model_names, metric_names;
    std::string group = "adr", bins, out_dir;
    AuditOptions options;
    audit->add_option("--model", model_names, "mv|annotator|oracle (repeatable)");
    audit->add_option("--group", group, "adr|popularity|ambiguity|demographic:<attr>");
    audit->add_option("--bins", bins, "Comma-separated bin edges from 0 to 1");
    audit->add_option("--metric", metric_names, "accuracy|precision|recall|f1 (repeatable, averaged)");
    audit->add_option("--quality-threshold", options.quality_threshold, "Drop annotators scoring below this");
    audit->add_option("--min-support", options.min_support, "Minimum evaluation annotations per user");
    audit->add_option("--seed", options.seed, "Seed for splits, training and balancing");
    audit->add_option("--text-buckets", options.n_text_buckets, "Hashed text feature buckets (power of two)");
    audit->add_option("--out", out_dir, "Output directory")->required();

    auto* compare = app.add_subcommand("compare", "Show two saved reports side by side");
    std::string left_path, right_path;
    compare->add_option("left", left_path, "First report.json")->required();
    compare->add_option("right", right_path, "Second report.json")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*validate) {
            run_validate(validate_args, out);
        } else if (*stats) {
            run_stats(stats_args, per_sample, out);
        } else if (*synth) {
            run_synth(synth_config, synth_out, out);
        } else if (*audit) {
            if (!model_names.empty()) {
                options.models.clear();
                for (const auto& m : model_names) options.models.push_back(parse_model_kind(m));
            }
            if (!metric_names.empty()) {
                options.metrics.clear();
                for (const auto& m : metric_names) options.metrics.push_back(parse_metric(m));
            }
            options.grouping = GroupingStrategy::parse(group, bins.empty() ? std::vector<double>{} : parse_edges(bins));
            options.validate();
            const auto dataset = audit_args.load();
            const auto report = run_audit(dataset, options);
            ensure_dir(out_dir);
            write_file(fs::path(out_dir) / "report.json", render_report(report, ReportFormat::json));
            write_file(fs::path(out_dir) / "report.csv", render_report(report, ReportFormat::csv));
            write_file(fs::path(out_dir) / "report.txt", render_report(report, ReportFormat::text));
            write_file(fs::path(out_dir) / "heatmap.svg", render_heatmap(heatmap_columns(report)));
            out << render_report(report, ReportFormat::text);
        } else if (*compare) {
            const auto left = report_from_json(read_file(left_path));
            const auto right = report_from_json(read_file(right_path));
            out << render_comparison(left, right);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace opinion_audit
