#include "kgte/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "kgte/error.hpp"
#include "kgte/evaluation.hpp"
#include "kgte/extraction.hpp"

namespace kgte {

FitResult linear_fit(const std::vector<Point>& points) {
    if (points.size() < 2) throw Error(ErrorCode::InvalidArgument, "linear fit needs at least two points");
    const double n = static_cast<double>(points.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& p : points) {
        mean_x += p.x;
        mean_y += p.y;
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.x - mean_x;
        const double dy = p.y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "linear fit needs at least two distinct x values");

    FitResult fit;
    fit.n_points = points.size();
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    if (syy == 0.0) {
        fit.r2 = 0.0;
        return fit;
    }
    double ss_res = 0.0;
    for (const auto& p : points) {
        const double r = p.y - (fit.slope * p.x + fit.intercept);
        ss_res += r * r;
    }
    fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return fit;
}

FitResult log_param_fit(const std::vector<Point>& points) {
    std::vector<Point> logged;
    logged.reserve(points.size());
    for (const auto& p : points) {
        if (!(p.x > 0.0)) throw Error(ErrorCode::InvalidArgument, "parameter counts must be positive");
        logged.push_back({std::log(p.x), p.y});
    }
    return linear_fit(logged);
}

std::vector<Point> read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::vector<Point> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw RecordError(path, lineno, "expected x,y");
        try {
            std::size_t used_x = 0;
            std::size_t used_y = 0;
            const std::string xs = line.substr(0, comma);
            const std::string ys = line.substr(comma + 1);
            const double x = std::stod(xs, &used_x);
            const double y = std::stod(ys, &used_y);
            points.push_back({x, y});
        } catch (const std::logic_error&) {
            if (lineno == 1) continue;  // header
            throw RecordError(path, lineno, "non-numeric value");
        }
    }
    return points;
}

std::string points_to_csv(const std::vector<Point>& points) {
    std::ostringstream out;
    out.precision(17);
    out << "x,y\n";
    for (const auto& p : points) out << p.x << ',' << p.y << '\n';
    return out.str();
}

namespace {

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

// A sentence reduced to what the random model needs: the deduplicated
// context size and which context positions hold a gold triplet.
struct StudySentence {
    std::vector<char> is_gold;
    std::size_t n_gold = 0;
};

struct TrialOutcome {
    double f1_sum = 0.0;
    Counts total;
};

struct StudyInputs {
    RandomStudyRow row;
    std::vector<StudySentence> sentences;
    std::vector<std::vector<Triplet>> pools;
    std::vector<std::vector<Triplet>> gold_sets;
};

StudyInputs prepare_study(const std::vector<std::vector<Triplet>>& contexts,
                          const std::vector<std::vector<Triplet>>& gold, std::size_t n_kb,
                          std::size_t max_triplets, std::size_t trials) {
    if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
    if (contexts.size() != gold.size()) throw Error(ErrorCode::Misaligned, "contexts and gold differ in length");
    if (gold.empty()) throw Error(ErrorCode::EmptyInput, "random model study needs at least one sentence");
    if (n_kb == 0 || max_triplets == 0) throw Error(ErrorCode::InvalidArgument, "n_kb and max_triplets must be >= 1");

    StudyInputs in;
    in.row.n_kb = n_kb;
    in.row.p = context_hit_probability(contexts, gold);
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        auto pool = dedup_triplets(contexts[i]);
        auto g = dedup_triplets(gold[i]);
        StudySentence s;
        s.n_gold = g.size();
        for (const auto& t : pool) s.is_gold.push_back(std::find(g.begin(), g.end(), t) != g.end());
        in.sentences.push_back(std::move(s));
        in.pools.push_back(std::move(pool));
        in.gold_sets.push_back(std::move(g));
    }
    return in;
}

// Same draw as random_extract: n ~ U{1..max}, then std::sample of
// min(n, |pool|) positions. std::sample picks positions from sizes and the
// generator alone, so sampling indices selects the same triplets.
TrialOutcome run_trial(const std::vector<StudySentence>& sentences, std::size_t max_triplets,
                       std::uint64_t seed, std::uint64_t trial, std::vector<std::size_t>& positions,
                       std::vector<std::size_t>& chosen) {
    auto rng = trial_rng(seed, trial);
    std::uniform_int_distribution<std::size_t> pick_n(1, max_triplets);
    TrialOutcome out;
    for (const auto& s : sentences) {
        Counts c{0, 0, s.n_gold};
        const std::size_t pool = s.is_gold.size();
        if (pool > 0) {
            const std::size_t n = std::min(pick_n(rng), pool);
            positions.resize(pool);
            std::iota(positions.begin(), positions.end(), std::size_t{0});
            chosen.clear();
            std::sample(positions.begin(), positions.end(), std::back_inserter(chosen), n, rng);
            for (auto idx : chosen) c.tp += static_cast<std::size_t>(s.is_gold[idx]);
            c.n_pred = n;
        }
        out.f1_sum += c.f1();
        out.total += c;
    }
    return out;
}

RandomStudyRow finish_study(StudyInputs in, const std::vector<TrialOutcome>& trials, std::size_t max_triplets) {
    RandomStudyRow row = in.row;
    double mc = 0.0;
    double micro = 0.0;
    const double n_sentences = static_cast<double>(in.sentences.size());
    for (const auto& t : trials) {
        mc += t.f1_sum / n_sentences;
        micro += t.total.f1();
    }
    row.monte_carlo_f1 = mc / static_cast<double>(trials.size());
    row.monte_carlo_micro_f1 = micro / static_cast<double>(trials.size());

    double closed = 0.0;
    for (const auto& g : in.gold_sets) {
        closed += random_f1_closed_form(row.p, row.n_kb, std::max<std::size_t>(1, g.size()));
    }
    row.closed_form_f1 = closed / n_sentences;

    const bool feasible = std::all_of(in.pools.begin(), in.pools.end(),
                                      [](const auto& pool) { return pool.size() <= kMaxExhaustiveContext; });
    if (feasible) {
        double exact = 0.0;
        for (std::size_t i = 0; i < in.pools.size(); ++i) {
            exact += random_f1_exhaustive(in.pools[i], in.gold_sets[i], max_triplets);
        }
        row.exhaustive_f1 = exact / n_sentences;
    }
    return row;
}

}  // namespace

RandomStudyRow random_model_row(const std::vector<std::vector<Triplet>>& contexts,
                                const std::vector<std::vector<Triplet>>& gold, std::size_t n_kb,
                                std::size_t max_triplets, std::uint64_t seed, std::size_t trials) {
    auto in = prepare_study(contexts, gold, n_kb, max_triplets, trials);
    std::vector<TrialOutcome> outcomes(trials);
    const auto n_trials = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel
    {
        std::vector<std::size_t> positions;
        std::vector<std::size_t> chosen;
#pragma omp for schedule(static)
        for (std::ptrdiff_t t = 0; t < n_trials; ++t) {
            outcomes[static_cast<std::size_t>(t)] =
                run_trial(in.sentences, max_triplets, seed, static_cast<std::uint64_t>(t), positions, chosen);
        }
    }
    return finish_study(std::move(in), outcomes, max_triplets);
}

RandomStudyRow random_model_row_serial(const std::vector<std::vector<Triplet>>& contexts,
                                       const std::vector<std::vector<Triplet>>& gold, std::size_t n_kb,
                                       std::size_t max_triplets, std::uint64_t seed, std::size_t trials) {
    auto in = prepare_study(contexts, gold, n_kb, max_triplets, trials);
    std::vector<TrialOutcome> outcomes;
    outcomes.reserve(trials);
    std::vector<std::size_t> positions;
    std::vector<std::size_t> chosen;
    for (std::size_t t = 0; t < trials; ++t) {
        outcomes.push_back(run_trial(in.sentences, max_triplets, seed, t, positions, chosen));
    }
    return finish_study(std::move(in), outcomes, max_triplets);
}

std::vector<RandomStudyRow> random_model_study(const std::vector<AnnotatedSentence>& split, const VectorIndex& index,
                                               const Encoder& encoder, const RandomStudyConfig& config) {
    if (index.kind() != NodeKind::Triplet) {
        throw Error(ErrorCode::InvalidArgument, "random model study samples from a triplet index");
    }
    std::vector<std::vector<Triplet>> gold;
    gold.reserve(split.size());
    for (const auto& s : split) gold.push_back(s.gold);

    std::vector<RandomStudyRow> rows;
    for (const auto n_kb : config.n_kb_values) {
        std::vector<std::vector<Triplet>> contexts;
        for (const auto& c : retrieve_all(split, index, encoder, n_kb)) contexts.push_back(c.triplet_set());
        rows.push_back(random_model_row(contexts, gold, n_kb, config.max_triplets, config.seed, config.trials));
    }
    return rows;
}

std::string random_study_to_csv(const std::vector<RandomStudyRow>& rows) {
    std::ostringstream out;
    out.precision(17);
    out << "n_kb,p,monte_carlo_f1,monte_carlo_micro_f1,closed_form_f1,exhaustive_f1,closed_form_minus_exhaustive\n";
    for (const auto& r : rows) {
        out << r.n_kb << ',' << r.p << ',' << r.monte_carlo_f1 << ',' << r.monte_carlo_micro_f1 << ','
            << r.closed_form_f1 << ',';
        if (r.exhaustive_f1) {
            out << *r.exhaustive_f1 << ',' << (r.closed_form_f1 - *r.exhaustive_f1);
        } else {
            out << ',';
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace kgte
