#include "opinion_audit/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

using ojson = nlohmann::ordered_json;

namespace {

std::size_t id_width(std::size_t n) {
    std::size_t width = 1;
    for (std::size_t v = n > 0 ? n - 1 : 0; v >= 10; v /= 10) ++width;
    return std::max<std::size_t>(width, 3);
}

std::size_t label_index(const std::vector<std::string>& labels, const std::string& label) {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw UsageError(fmt::format("synth: label \"{}\" is not in the label set", label));
    return static_cast<std::size_t>(it - labels.begin());
}

/// Annotator count per group: clusters in order, then spammers.
std::vector<std::size_t> group_populations(const SynthConfig& c) {
    std::vector<double> weights;
    for (const auto& cl : c.clusters) weights.push_back(cl.weight);
    auto pops = apportion(c.n_annotators - c.spammer_count, weights);
    pops.push_back(c.spammer_count);
    return pops;
}

/// Slots per group for each sample. Depends only on the config shape, never on the seed, so each
/// group's share of every sample tracks its share of the annotator pool.
std::vector<std::vector<std::size_t>> compositions(const SynthConfig& c) {
    const auto pops = group_populations(c);
    const auto n = static_cast<std::int64_t>(c.n_annotators);
    const auto aps = static_cast<std::int64_t>(c.annotators_per_sample);
    std::vector<std::int64_t> allocated(pops.size(), 0);
    std::vector<std::vector<std::size_t>> out(c.n_samples, std::vector<std::size_t>(pops.size(), 0));
    for (std::size_t s = 0; s < c.n_samples; ++s) {
        std::vector<std::int64_t> residual(pops.size());
        for (std::size_t g = 0; g < pops.size(); ++g)
            residual[g] = static_cast<std::int64_t>(s + 1) * aps * static_cast<std::int64_t>(pops[g]) - n * allocated[g];
        auto& slots = out[s];
        for (std::int64_t k = 0; k < aps; ++k) {
            std::size_t best = pops.size();
            for (std::size_t g = 0; g < pops.size(); ++g) {
                if (slots[g] >= pops[g]) continue;
                if (best == pops.size() || residual[g] > residual[best]) best = g;
            }
            ++slots[best];
            residual[best] -= n;
        }
        for (std::size_t g = 0; g < pops.size(); ++g) allocated[g] += static_cast<std::int64_t>(slots[g]);
    }
    return out;
}

/// Sample types in generation order: nullopt = ambiguous, otherwise the latent label. Before shuffling.
std::vector<std::optional<std::size_t>> type_quota(const SynthConfig& c) {
    const auto n_amb = static_cast<std::size_t>(std::llround(c.fraction_ambiguous * static_cast<double>(c.n_samples)));
    std::vector<std::optional<std::size_t>> types(n_amb, std::nullopt);
    const std::vector<double> even(c.labels.size(), 1.0);
    const auto per_label = apportion(c.n_samples - n_amb, even);
    for (std::size_t l = 0; l < per_label.size(); ++l) types.insert(types.end(), per_label[l], l);
    return types;
}

/// Distribution of one annotator's label in group g on a sample of the given type.
std::vector<double> label_distribution(const SynthConfig& c, std::size_t g, std::optional<std::size_t> type) {
    const std::size_t k = c.labels.size();
    if (g == c.clusters.size()) return std::vector<double>(k, 1.0 / static_cast<double>(k));
    const auto& cl = c.clusters[g];
    const std::size_t intended = type ? *type : label_index(c.labels, cl.ambiguous_label);
    std::vector<double> p(k, cl.noise_rate / static_cast<double>(k - 1));
    p[intended] = 1.0 - cl.noise_rate;
    return p;
}

std::vector<std::pair<std::string, double>> shares_for(const SynthCluster& cl, const DemographicAttribute& attr) {
    auto it = cl.demographics.find(attr.name);
    if (it != cl.demographics.end()) return it->second;
    std::vector<std::pair<std::string, double>> even;
    for (const auto& v : attr.values) even.emplace_back(v, 1.0);
    return even;
}

}  // namespace

void SynthConfig::validate() const {
    if (n_samples == 0) throw UsageError("synth: n_samples must be positive");
    if (labels.size() < 2) throw UsageError("synth: at least two labels are needed");
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size())
        throw UsageError("synth: duplicate label");
    if (clusters.empty()) throw UsageError("synth: at least one cluster is needed");
    if (annotators_per_sample == 0) throw UsageError("synth: annotators_per_sample must be positive");
    if (annotators_per_sample > n_annotators)
        throw UsageError(fmt::format("synth: annotators_per_sample ({}) exceeds n_annotators ({})",
                                     annotators_per_sample, n_annotators));
    if (spammer_count >= n_annotators) throw UsageError("synth: spammer_count leaves no cluster annotators");
    if (!(fraction_ambiguous >= 0.0 && fraction_ambiguous <= 1.0))
        throw UsageError("synth: fraction_ambiguous must lie in [0, 1]");
    if (cue_tokens == 0 || synonyms == 0) throw UsageError("synth: cue_tokens and synonyms must be positive");
    if (filler_tokens > 0 && filler_vocabulary == 0) throw UsageError("synth: filler_vocabulary must be positive");
    double total = 0.0;
    for (const auto& cl : clusters) {
        if (!(cl.weight >= 0.0)) throw UsageError("synth: cluster weights must be non-negative");
        if (!(cl.noise_rate >= 0.0 && cl.noise_rate <= 1.0)) throw UsageError("synth: noise_rate must lie in [0, 1]");
        label_index(labels, cl.ambiguous_label);
        for (const auto& [attr, shares] : cl.demographics) {
            auto a = std::find_if(demographic_vocab.begin(), demographic_vocab.end(),
                                  [&](const DemographicAttribute& d) { return d.name == attr; });
            if (a == demographic_vocab.end())
                throw UsageError(fmt::format("synth: cluster uses undeclared attribute \"{}\"", attr));
            double sum = 0.0;
            for (const auto& [value, share] : shares) {
                if (std::find(a->values.begin(), a->values.end(), value) == a->values.end())
                    throw UsageError(fmt::format("synth: value \"{}\" is not declared for \"{}\"", value, attr));
                if (!(share >= 0.0)) throw UsageError("synth: demographic shares must be non-negative");
                sum += share;
            }
            if (!(sum > 0.0)) throw UsageError(fmt::format("synth: shares for \"{}\" sum to zero", attr));
        }
        total += cl.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw UsageError(fmt::format("synth: cluster weights sum to {}, not 1", total));
    for (const auto& attr : demographic_vocab)
        if (attr.values.empty()) throw UsageError(fmt::format("synth: attribute \"{}\" has no values", attr.name));
    const auto pops = group_populations(*this);
    std::size_t populated = 0;
    for (std::size_t g = 0; g < pops.size(); ++g) populated += pops[g];
    if (populated != n_annotators) throw UsageError("synth: annotator apportionment failed");
}

SynthConfig synth_config_from_json(std::string_view json_text) {
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const ojson::parse_error& e) {
        throw UsageError(fmt::format("synth config is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) throw UsageError("synth config must be a JSON object");
    static const std::set<std::string> known{
        "n_samples", "n_annotators", "annotators_per_sample", "labels", "demographics", "clusters",
        "spammer_count", "fraction_ambiguous", "cue_tokens", "filler_tokens", "synonyms", "filler_vocabulary", "seed"};
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw UsageError(fmt::format("synth config: unknown key \"{}\"", key));

    SynthConfig c;
    try {
        auto count = [&](const char* key, std::size_t& out) {
            if (j.contains(key)) out = j.at(key).get<std::size_t>();
        };
        count("n_samples", c.n_samples);
        count("n_annotators", c.n_annotators);
        count("annotators_per_sample", c.annotators_per_sample);
        count("spammer_count", c.spammer_count);
        count("cue_tokens", c.cue_tokens);
        count("filler_tokens", c.filler_tokens);
        count("synonyms", c.synonyms);
        count("filler_vocabulary", c.filler_vocabulary);
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("fraction_ambiguous")) c.fraction_ambiguous = j.at("fraction_ambiguous").get<double>();
        if (j.contains("labels")) c.labels = j.at("labels").get<std::vector<std::string>>();
        if (j.contains("demographics"))
            for (const auto& [name, values] : j.at("demographics").items())
                c.demographic_vocab.push_back({name, values.get<std::vector<std::string>>()});
        for (const auto& cj : j.at("clusters")) {
            SynthCluster cl;
            cl.weight = cj.at("weight").get<double>();
            cl.ambiguous_label = cj.at("ambiguous_label").get<std::string>();
            if (cj.contains("noise_rate")) cl.noise_rate = cj.at("noise_rate").get<double>();
            if (cj.contains("demographics"))
                for (const auto& [attr, shares] : cj.at("demographics").items())
                    for (const auto& [value, share] : shares.items())
                        cl.demographics[attr].emplace_back(value, share.get<double>());
            c.clusters.push_back(std::move(cl));
        }
    } catch (const ojson::exception& e) {
        throw UsageError(fmt::format("synth config: {}", e.what()));
    }
    c.validate();
    return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
    ojson j;
    j["n_samples"] = c.n_samples;
    j["n_annotators"] = c.n_annotators;
    j["annotators_per_sample"] = c.annotators_per_sample;
    j["labels"] = c.labels;
    j["demographics"] = ojson::object();
    for (const auto& attr : c.demographic_vocab) j["demographics"][attr.name] = attr.values;
    j["clusters"] = ojson::array();
    for (const auto& cl : c.clusters) {
        ojson cj;
        cj["weight"] = cl.weight;
        cj["ambiguous_label"] = cl.ambiguous_label;
        cj["noise_rate"] = cl.noise_rate;
        cj["demographics"] = ojson::object();
        for (const auto& [attr, shares] : cl.demographics)
            for (const auto& [value, share] : shares) cj["demographics"][attr][value] = share;
        j["clusters"].push_back(std::move(cj));
    }
    j["spammer_count"] = c.spammer_count;
    j["fraction_ambiguous"] = c.fraction_ambiguous;
    j["cue_tokens"] = c.cue_tokens;
    j["filler_tokens"] = c.filler_tokens;
    j["synonyms"] = c.synonyms;
    j["filler_vocabulary"] = c.filler_vocabulary;
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

std::vector<std::string> SynthTruth::spammer_ids(const AnnotatedDataset& dataset) const {
    std::vector<std::string> ids;
    for (std::size_t a = 0; a < annotator_cluster.size(); ++a)
        if (!annotator_cluster[a]) ids.push_back(dataset.annotators()[a].id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

SynthOutput generate(const SynthConfig& config) {
    config.validate();
    const auto& c = config;
    const std::size_t k = c.labels.size();
    const std::size_t n_groups = c.clusters.size() + 1;
    const auto pops = group_populations(c);

    // Annotators: group tags shuffled over ids so ids carry no cluster information.
    std::vector<std::size_t> tags;
    for (std::size_t g = 0; g < n_groups; ++g) tags.insert(tags.end(), pops[g], g);
    Rng annotator_rng(derive_seed(c.seed, "synth/annotators"));
    annotator_rng.shuffle(tags);
    std::vector<std::vector<std::size_t>> members(n_groups);
    for (std::size_t a = 0; a < tags.size(); ++a) members[tags[a]].push_back(a);

    // Demographics: exact quotas within each cluster, uniform draws for spammers.
    std::vector<std::optional<Demographics>> demographics(c.n_annotators);
    if (!c.demographic_vocab.empty()) {
        Rng demo_rng(derive_seed(c.seed, "synth/demographics"));
        for (auto& d : demographics) d.emplace();
        for (const auto& attr : c.demographic_vocab) {
            for (std::size_t g = 0; g + 1 < n_groups; ++g) {
                const auto shares = shares_for(c.clusters[g], attr);
                std::vector<double> weights;
                for (const auto& s : shares) weights.push_back(s.second);
                const auto counts = apportion(members[g].size(), weights);
                std::vector<std::string> values;
                for (std::size_t v = 0; v < shares.size(); ++v) values.insert(values.end(), counts[v], shares[v].first);
                demo_rng.shuffle(values);
                for (std::size_t m = 0; m < members[g].size(); ++m) (*demographics[members[g][m]])[attr.name] = values[m];
            }
            for (std::size_t a : members[n_groups - 1])
                (*demographics[a])[attr.name] = attr.values[demo_rng.below(attr.values.size())];
        }
    }

    // Sample types.
    auto types = type_quota(c);
    Rng type_rng(derive_seed(c.seed, "synth/types"));
    type_rng.shuffle(types);

    // Pseudo-text.
    Rng text_rng(derive_seed(c.seed, "synth/text"));
    const std::size_t filler_width = id_width(c.filler_vocabulary + 1);
    std::vector<std::string> texts(c.n_samples);
    for (std::size_t s = 0; s < c.n_samples; ++s) {
        std::vector<std::string> tokens;
        for (std::size_t t = 0; t < c.cue_tokens; ++t) {
            const auto syn = text_rng.below(c.synonyms);
            tokens.push_back(types[s] ? fmt::format("c{}s{}", *types[s], syn) : fmt::format("amb{}", syn));
        }
        for (std::size_t t = 0; t < c.filler_tokens; ++t)
            tokens.push_back(fmt::format("w{:0{}}", text_rng.below(c.filler_vocabulary), filler_width));
        text_rng.shuffle(tokens);
        std::string text;
        for (const auto& tok : tokens) {
            if (!text.empty()) text += ' ';
            text += tok;
        }
        texts[s] = std::move(text);
    }

    AnnotatedDataset::Builder builder(c.labels, c.demographic_vocab);
    const std::size_t sw = id_width(c.n_samples);
    const std::size_t aw = id_width(c.n_annotators);
    for (std::size_t s = 0; s < c.n_samples; ++s) builder.add_sample(fmt::format("s{:0{}}", s, sw), texts[s]);
    for (std::size_t a = 0; a < c.n_annotators; ++a)
        builder.add_annotator(fmt::format("a{:0{}}", a, aw), demographics[a]);

    // Assignment: least-loaded members within each stratum, then overall; seeded tie-break.
    const auto comps = compositions(c);
    std::vector<std::array<std::size_t, 2>> load(c.n_annotators, {0, 0});
    Rng assign_rng(derive_seed(c.seed, "synth/assign"));
    Rng label_rng(derive_seed(c.seed, "synth/labels"));
    SynthTruth truth;
    truth.annotator_cluster.resize(c.n_annotators);
    for (std::size_t a = 0; a < c.n_annotators; ++a)
        if (tags[a] + 1 < n_groups) truth.annotator_cluster[a] = tags[a];
    truth.sample_latent = types;

    for (std::size_t s = 0; s < c.n_samples; ++s) {
        const std::size_t stratum = types[s] ? 0 : 1;
        std::vector<std::size_t> chosen;
        for (std::size_t g = 0; g < n_groups; ++g) {
            if (comps[s][g] == 0) continue;
            std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
            for (std::size_t a : members[g]) keyed.emplace_back(assign_rng.next(), a);
            std::sort(keyed.begin(), keyed.end(), [&](const auto& x, const auto& y) {
                const auto& lx = load[x.second];
                const auto& ly = load[y.second];
                if (lx[stratum] != ly[stratum]) return lx[stratum] < ly[stratum];
                if (lx[0] + lx[1] != ly[0] + ly[1]) return lx[0] + lx[1] < ly[0] + ly[1];
                return x.first < y.first;
            });
            for (std::size_t m = 0; m < comps[s][g]; ++m) chosen.push_back(keyed[m].second);
        }
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t a : chosen) {
            ++load[a][stratum];
            std::size_t label;
            std::optional<std::size_t> intended;
            if (tags[a] + 1 == n_groups) {
                label = label_rng.below(k);
            } else {
                const auto& cl = c.clusters[tags[a]];
                intended = types[s] ? *types[s] : label_index(c.labels, cl.ambiguous_label);
                label = *intended;
                if (label_rng.bernoulli(cl.noise_rate)) {
                    label = label_rng.below(k - 1);
                    if (label >= *intended) ++label;
                }
            }
            builder.add_annotation(s, a, label);
            truth.intended.push_back(intended);
        }
    }
    return {std::move(builder).build(), std::move(truth)};
}

std::string truth_to_json(const SynthTruth& truth, const AnnotatedDataset& dataset) {
    ojson j;
    j["annotators"] = ojson::object();
    for (std::size_t a = 0; a < truth.annotator_cluster.size(); ++a) {
        const auto& cl = truth.annotator_cluster[a];
        j["annotators"][dataset.annotators()[a].id] = cl ? fmt::format("cluster{}", *cl) : std::string("spammer");
    }
    j["samples"] = ojson::object();
    for (std::size_t s = 0; s < truth.sample_latent.size(); ++s) {
        const auto& t = truth.sample_latent[s];
        j["samples"][dataset.samples()[s].id] = t ? dataset.label_set()[*t] : std::string("ambiguous");
    }
    j["intended"] = ojson::array();
    for (std::size_t i = 0; i < truth.intended.size(); ++i) {
        const auto& ann = dataset.annotations()[i];
        ojson row = ojson::array({dataset.samples()[ann.sample].id, dataset.annotators()[ann.annotator].id});
        row.push_back(truth.intended[i] ? ojson(dataset.label_set()[*truth.intended[i]]) : ojson(nullptr));
        j["intended"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

namespace {

using Histogram = std::vector<std::size_t>;
using HistogramDist = std::map<Histogram, double>;

HistogramDist histogram_distribution(const std::vector<std::vector<double>>& annotators, std::size_t k) {
    HistogramDist dist{{Histogram(k, 0), 1.0}};
    for (const auto& p : annotators) {
        HistogramDist next;
        for (const auto& [h, prob] : dist)
            for (std::size_t l = 0; l < k; ++l) {
                if (p[l] == 0.0) continue;
                Histogram h2 = h;
                ++h2[l];
                next[h2] += prob * p[l];
            }
        dist = std::move(next);
    }
    return dist;
}

SampleStats stats_of(const Histogram& h) {
    SampleStats st;
    st.histogram = h;
    st.total = std::accumulate(h.begin(), h.end(), std::size_t{0});
    auto top = std::max_element(h.begin(), h.end());
    st.majority_label = static_cast<std::size_t>(top - h.begin());
    st.is_tie = std::count(h.begin(), h.end(), *top) > 1;
    st.ambiguity = ambiguity(st);
    return st;
}

struct CellStats {
    std::vector<double> p_disagree;  // per group, for one member of that group
    std::vector<double> loo;         // per group, expected leave-one-out agreement
    std::vector<double> popularity;  // per group
    std::map<double, double> ambiguity;
};

CellStats cell_stats(const SynthConfig& c, const std::vector<std::size_t>& comp, std::optional<std::size_t> type) {
    const std::size_t k = c.labels.size();
    const std::size_t n_groups = comp.size();
    std::vector<std::vector<double>> p(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) p[g] = label_distribution(c, g, type);
    const std::size_t n = std::accumulate(comp.begin(), comp.end(), std::size_t{0});

    CellStats out;
    out.p_disagree.assign(n_groups, 0.0);
    out.loo.assign(n_groups, 0.0);
    out.popularity.assign(n_groups, 0.0);

    std::vector<std::vector<double>> everyone;
    for (std::size_t g = 0; g < n_groups; ++g) everyone.insert(everyone.end(), comp[g], p[g]);
    for (const auto& [h, prob] : histogram_distribution(everyone, k)) out.ambiguity[stats_of(h).ambiguity] += prob;

    for (std::size_t g = 0; g < n_groups; ++g) {
        if (comp[g] == 0) continue;
        std::vector<std::vector<double>> others;
        std::vector<double> others_mean(k, 0.0);
        for (std::size_t g2 = 0; g2 < n_groups; ++g2) {
            const std::size_t count = comp[g2] - (g2 == g ? 1 : 0);
            others.insert(others.end(), count, p[g2]);
            for (std::size_t l = 0; l < k; ++l) others_mean[l] += static_cast<double>(count) * p[g2][l];
        }
        const auto rest = histogram_distribution(others, k);
        for (std::size_t l = 0; l < k; ++l) {
            if (p[g][l] == 0.0) continue;
            double disagree = 0.0;
            for (const auto& [h, prob] : rest) {
                Histogram full = h;
                ++full[l];
                if (stats_of(full).majority_label != l) disagree += prob;
            }
            out.p_disagree[g] += p[g][l] * disagree;
            if (n > 1) out.loo[g] += p[g][l] * others_mean[l] / static_cast<double>(n - 1);
            out.popularity[g] += p[g][l] * (1.0 + others_mean[l]) / static_cast<double>(n);
        }
    }
    return out;
}

}  // namespace

ExpectedStats expected_stats(const SynthConfig& config) {
    config.validate();
    const auto& c = config;
    const std::size_t n_groups = c.clusters.size() + 1;
    const auto comps = compositions(c);
    const auto types = type_quota(c);

    // Every composition meets every type with the type's overall frequency.
    std::map<std::vector<std::size_t>, std::size_t> comp_freq;
    for (const auto& comp : comps) ++comp_freq[comp];
    std::map<std::optional<std::size_t>, std::size_t> type_freq;
    for (const auto& t : types) ++type_freq[t];
    const double n_cells = static_cast<double>(comps.size()) * static_cast<double>(types.size());

    std::vector<double> adr_num(n_groups, 0.0), quality_num(n_groups, 0.0), slot_weight(n_groups, 0.0);
    std::vector<double> scored_weight(n_groups, 0.0), pop_num(n_groups, 0.0), pop_weight(n_groups, 0.0);
    std::map<double, double> amb;
    for (const auto& [comp, cf] : comp_freq) {
        const std::size_t n = std::accumulate(comp.begin(), comp.end(), std::size_t{0});
        for (const auto& [type, tf] : type_freq) {
            const double w = static_cast<double>(cf) * static_cast<double>(tf) / n_cells;
            const auto cell = cell_stats(c, comp, type);
            for (const auto& [value, prob] : cell.ambiguity) amb[value] += w * prob;
            for (std::size_t g = 0; g < n_groups; ++g) {
                const double slots = w * static_cast<double>(comp[g]);
                adr_num[g] += slots * cell.p_disagree[g];
                slot_weight[g] += slots;
                if (n > 1) {
                    quality_num[g] += slots * cell.loo[g];
                    scored_weight[g] += slots;
                }
                if (!type) {
                    pop_num[g] += slots * cell.popularity[g];
                    pop_weight[g] += slots;
                }
            }
        }
    }

    ExpectedStats out;
    for (std::size_t g = 0; g < n_groups; ++g) {
        if (g + 1 == n_groups && c.spammer_count == 0) break;
        GroupExpectation e;
        e.name = g + 1 == n_groups ? "spammers" : fmt::format("cluster{}", g);
        e.adr = slot_weight[g] > 0 ? adr_num[g] / slot_weight[g] : 0.0;
        e.quality = scored_weight[g] > 0 ? quality_num[g] / scored_weight[g] : 0.0;
        e.popularity_ambiguous = pop_weight[g] > 0 ? pop_num[g] / pop_weight[g] : 0.0;
        out.groups.push_back(std::move(e));
    }
    for (const auto& [value, prob] : amb) {
        out.ambiguity_distribution.emplace_back(value, prob);
        out.mean_ambiguity += value * prob;
        if (value == 0.0) out.p_unanimous += prob;
    }
    return out;
}

}  // namespace opinion_audit
