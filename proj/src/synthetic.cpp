#include "alab/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <unordered_map>

#include "alab/csv.hpp"
#include "alab/errors.hpp"

#include <json.hpp>

namespace alab {

namespace {

// mt19937_64 is fully specified by the standard; the transforms below avoid
// std::*_distribution so the byte stream is identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double gauss() {  // Box-Muller
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    std::size_t index(std::size_t n) {  // [0, n), unbiased
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return static_cast<std::size_t>(v % n);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

std::vector<double> random_unit_vector(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm_sq;
    do {
        norm_sq = 0.0;
        for (double& x : v) {
            x = rng.gauss();
            norm_sq += x * x;
        }
    } while (norm_sq < 1e-12);
    double norm = std::sqrt(norm_sq);
    for (double& x : v) x /= norm;
    return v;
}

// Tail composition: counts of 2 (and at most one 3) so the min-producer
// filter is a no-op and the planted completion stays the unique mode.
std::vector<std::uint64_t> tail_counts(double share, std::uint64_t total, const char* which) {
    auto infeasible = [&](const std::string& why) {
        throw Error(ErrorKind::Infeasible, std::string(which) + " modal share " + std::to_string(share) +
                                               " infeasible for " + std::to_string(total) + " responses: " + why);
    };
    if (!(share > 0.0 && share <= 1.0)) infeasible("share must be in (0, 1]");
    auto modal = static_cast<std::uint64_t>(std::llround(share * static_cast<double>(total)));
    if (modal < 1) infeasible("modal count rounds to zero");
    if (modal > total) modal = total;
    std::uint64_t tail = total - modal;
    if (tail == 0) return {modal};
    if (tail == 1) infeasible("a tail of one response cannot form counts >= 2");
    std::uint64_t threes = tail % 2;  // 0 or 1
    std::uint64_t twos = (tail - 3 * threes) / 2;
    std::uint64_t max_tail = threes > 0 ? 3 : 2;
    if (modal <= max_tail) infeasible("modal count would not exceed the tail counts");
    std::vector<std::uint64_t> counts;
    counts.push_back(modal);
    counts.insert(counts.end(), threes, 3);
    counts.insert(counts.end(), twos, 2);
    return counts;
}

double alignment(const std::vector<double>& a, const std::vector<double>& b,
                 const std::vector<double>& c, const std::vector<double>& d) {
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double r1 = b[j] - a[j];
        double r2 = d[j] - c[j];
        dot += r1 * r2;
        n1 += r1 * r1;
        n2 += r2 * r2;
    }
    if (n1 < 1e-24 || n2 < 1e-24) return 0.0;
    return dot / std::sqrt(n1 * n2);
}

std::string zero_padded(std::size_t value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& config) {
    if (config.vocab_size < 10) {
        throw Error(ErrorKind::Usage, "vocab_size must be >= 10");
    }
    if (config.n_stems < 1) {
        throw Error(ErrorKind::Usage, "n_stems must be >= 1");
    }
    if (config.dim < 2) {
        throw Error(ErrorKind::Usage, "dim must be >= 2");
    }
    if (config.responses_per_stem < 1) {
        throw Error(ErrorKind::Usage, "responses_per_stem must be >= 1");
    }
    if (config.vocab_size < config.n_stems + 4) {
        throw Error(ErrorKind::Infeasible, "vocab_size must exceed n_stems by at least 4 (stem words plus "
                                           "planted completions)");
    }

    Rng rng(config.seed);
    SynthData data;
    const std::size_t n_filler = config.vocab_size - config.n_stems;

    data.vocab.reserve(config.vocab_size);
    data.vectors.reserve(config.vocab_size);
    for (std::size_t i = 0; i < n_filler; ++i) {
        data.vocab.push_back("w" + zero_padded(i, 6));
        data.vectors.push_back(random_unit_vector(rng, config.dim));
    }

    // Stems draw distinct filler triples; the planted word sits exactly at
    // the normalized parallelogram offset of its stem.
    std::set<std::array<std::size_t, 3>> used_triples;
    for (std::size_t s = 0; s < config.n_stems; ++s) {
        std::array<std::size_t, 3> triple{};
        std::vector<double> offset(config.dim);
        double norm = 0.0;
        int attempts = 0;
        do {
            if (++attempts > 1000) {
                throw Error(ErrorKind::Infeasible, "could not draw a non-degenerate stem triple");
            }
            triple[0] = rng.index(n_filler);
            triple[1] = rng.index(n_filler);
            triple[2] = rng.index(n_filler);
            if (triple[0] == triple[1] || triple[0] == triple[2] || triple[1] == triple[2]) continue;
            if (used_triples.contains(triple)) continue;
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < config.dim; ++j) {
                offset[j] = data.vectors[triple[1]][j] - data.vectors[triple[0]][j] +
                            data.vectors[triple[2]][j];
                norm_sq += offset[j] * offset[j];
            }
            norm = std::sqrt(norm_sq);
        } while (norm < 0.3);
        used_triples.insert(triple);

        for (double& x : offset) x /= norm;
        std::string planted_word = "plant" + zero_padded(s, 4);
        data.vocab.push_back(planted_word);
        data.vectors.push_back(offset);
        data.planted.push_back(planted_word);

        AnalogyStem stem;
        stem.id = "s" + zero_padded(s, 4);
        stem.a = data.vocab[triple[0]];
        stem.b = data.vocab[triple[1]];
        stem.c = data.vocab[triple[2]];
        stem.relation_category = "synthetic";
        stem.relation_subtype = "planted";
        data.stems.push_back(std::move(stem));
    }

    // Response distributions. The planted completion is the mode; the tail
    // is spread over distinct filler words at counts >= 2.
    auto human_counts = tail_counts(config.human_modal_share, config.responses_per_stem, "human");
    auto llm_counts = tail_counts(config.llm_modal_share, config.responses_per_stem, "llm");
    std::size_t max_tail_words = std::max(human_counts.size(), llm_counts.size()) - 1;
    if (max_tail_words + 4 > n_filler) {
        throw Error(ErrorKind::Infeasible, "vocabulary too small for the tail words the shares require");
    }

    for (std::size_t s = 0; s < config.n_stems; ++s) {
        const AnalogyStem& stem = data.stems[s];
        for (const auto& [system, counts] :
             {std::pair{config.human_system, &human_counts}, std::pair{config.llm_system, &llm_counts}}) {
            ResponseDistribution dist;
            dist.stem_id = stem.id;
            dist.system = system;
            std::set<std::size_t> taken;
            auto pick_filler = [&] {
                std::size_t pick;
                do {
                    pick = rng.index(n_filler);
                } while (taken.contains(pick) || data.vocab[pick] == stem.a ||
                         data.vocab[pick] == stem.b || data.vocab[pick] == stem.c);
                taken.insert(pick);
                return pick;
            };
            // The model system concentrates on the planted (parallelogram-
            // exact) completion; the human mode lands elsewhere for about
            // half the stems, so human and model modal responses genuinely
            // differ and the modal-only delta analysis has signal.
            std::string modal_word = data.planted[s];
            if (system == config.human_system && rng.index(2) == 0) {
                modal_word = data.vocab[pick_filler()];
            }
            dist.entries.push_back({modal_word, (*counts)[0]});
            for (std::size_t t = 1; t < counts->size(); ++t) {
                dist.entries.push_back({data.vocab[pick_filler()], (*counts)[t]});
            }
            data.responses.push_back(std::move(dist));
        }
    }

    // One pre-averaged rating per (stem, d_term): anchored to parallelogram
    // alignment with mild noise, clamped to the 7-point scale.
    std::unordered_map<std::string, std::size_t> word_index;
    for (std::size_t i = 0; i < data.vocab.size(); ++i) word_index[data.vocab[i]] = i;
    std::unordered_map<std::string, std::size_t> stem_index_by_id;
    for (std::size_t s = 0; s < data.stems.size(); ++s) stem_index_by_id[data.stems[s].id] = s;

    std::set<std::pair<std::string, std::string>> rated;
    for (const auto& dist : data.responses) {
        const AnalogyStem& stem = data.stems[stem_index_by_id.at(dist.stem_id)];
        auto id_of = [&](const std::string& w) { return word_index.at(w); };
        std::size_t ia = id_of(stem.a), ib = id_of(stem.b), ic = id_of(stem.c);
        for (const auto& e : dist.entries) {
            auto key = std::make_pair(dist.stem_id, e.d_term);
            if (rated.contains(key)) continue;
            rated.insert(key);
            std::size_t id = id_of(e.d_term);
            double align = alignment(data.vectors[ia], data.vectors[ib], data.vectors[ic],
                                     data.vectors[id]);
            double rating = 4.0 + 2.5 * align + 0.4 * rng.gauss();
            rating = std::clamp(std::round(rating * 100.0) / 100.0, 1.0, 7.0);
            data.ratings.push_back({dist.stem_id, e.d_term, rating, ""});
        }
    }

    // Zipf-shaped relative frequencies over the whole vocabulary.
    double harmonic = 0.0;
    for (std::size_t i = 0; i < config.vocab_size; ++i) harmonic += 1.0 / static_cast<double>(i + 1);
    data.wordfreq.reserve(config.vocab_size);
    for (std::size_t i = 0; i < config.vocab_size; ++i) {
        data.wordfreq.emplace_back(data.vocab[i], 1.0 / (static_cast<double>(i + 1) * harmonic));
    }

    return data;
}

void write_synthetic(const SynthData& data, const SynthConfig& config, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto open = [&](const char* name) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) {
            throw Error(ErrorKind::Io, std::string("cannot write ") + name + " under " + out_dir);
        }
        return out;
    };

    {
        auto out = open("embeddings.txt");
        for (std::size_t i = 0; i < data.vocab.size(); ++i) {
            out << data.vocab[i];
            for (double v : data.vectors[i]) out << ' ' << format_double(v);
            out << '\n';
        }
    }
    {
        auto out = open("stems.csv");
        out << "stem_id,a,b,c,relation_category,relation_subtype\n";
        for (const auto& s : data.stems) {
            out << csv_escape(s.id) << ',' << csv_escape(s.a) << ',' << csv_escape(s.b) << ','
                << csv_escape(s.c) << ',' << csv_escape(s.relation_category) << ','
                << csv_escape(s.relation_subtype) << '\n';
        }
    }
    {
        auto out = open("responses.csv");
        out << "stem_id,system,d_term,count\n";
        for (const auto& dist : data.responses) {
            for (const auto& e : dist.entries) {
                out << csv_escape(dist.stem_id) << ',' << csv_escape(dist.system) << ','
                    << csv_escape(e.d_term) << ',' << e.count << '\n';
            }
        }
    }
    {
        auto out = open("ratings.csv");
        out << "stem_id,d_term,rating\n";
        for (const auto& r : data.ratings) {
            out << csv_escape(r.stem_id) << ',' << csv_escape(r.d_term) << ',' << format_double(r.rating)
                << '\n';
        }
    }
    {
        auto out = open("wordfreq.tsv");
        out << "word\tfrequency\n";
        for (const auto& [word, freq] : data.wordfreq) {
            out << word << '\t' << format_double(freq) << '\n';
        }
    }
    {
        nlohmann::json manifest;
        manifest["schema"] = "analogylab.synth_manifest.v1";
        manifest["seed"] = config.seed;
        manifest["n_stems"] = config.n_stems;
        manifest["vocab_size"] = config.vocab_size;
        manifest["dim"] = config.dim;
        manifest["human_modal_share"] = config.human_modal_share;
        manifest["llm_modal_share"] = config.llm_modal_share;
        manifest["responses_per_stem"] = config.responses_per_stem;
        manifest["systems"] = {config.human_system, config.llm_system};
        nlohmann::json planted = nlohmann::json::object();
        for (std::size_t s = 0; s < data.stems.size(); ++s) {
            planted[data.stems[s].id] = data.planted[s];
        }
        manifest["planted"] = planted;
        auto out = open("manifest.json");
        out << manifest.dump(2) << '\n';
    }
}

}  // namespace alab
