#pragma once

#include <filesystem>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "kgte/corpus.hpp"

namespace kgte::testing {

inline AnnotatedSentence sentence(std::string text, std::vector<Triplet> gold) {
    return AnnotatedSentence{std::move(text), std::move(gold)};
}

inline Triplet T(const std::string& s, const std::string& p, const std::string& o) {
    return Triplet::make(s, p, o);
}

inline std::string random_word(std::mt19937_64& rng, std::size_t min_len = 2, std::size_t max_len = 8) {
    static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789.'&-";
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
    std::string w;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) w += alphabet[ch(rng)];
    // keep the first character a letter so words never look like list markers
    w[0] = static_cast<char>('a' + (rng() % 26));
    return w;
}

inline std::string random_phrase(std::mt19937_64& rng, std::size_t max_words = 3) {
    std::uniform_int_distribution<std::size_t> words(1, max_words);
    std::string out;
    const auto n = words(rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += random_word(rng);
    }
    return out;
}

inline Triplet random_triplet(std::mt19937_64& rng, std::size_t n_predicates = 0) {
    std::string predicate = n_predicates == 0 ? random_phrase(rng, 2)
                                              : "rel" + std::to_string(rng() % n_predicates);
    return Triplet::make(random_phrase(rng), predicate, random_phrase(rng));
}

/// Unique scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("kgte_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Each sentence mentions its own entities; its gold triplets are made of
/// those entities, so a triplet's nearest neighbour under the n-gram
/// encoder is the sentence that states it.
inline Dataset planted_dataset(std::size_t n_kb_sentences, std::size_t n_test, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<AnnotatedSentence> all;
    for (std::size_t i = 0; i < n_kb_sentences; ++i) {
        const std::string subj = random_word(rng, 8, 8) + " " + random_word(rng, 6, 6);
        const std::string obj = random_word(rng, 8, 8);
        const std::string rel = "rel" + std::to_string(i % 7);
        all.push_back(sentence(subj + " " + rel + " " + obj, {T(subj, rel, obj)}));
    }
    Dataset d;
    const std::size_t n_train = n_kb_sentences * 4 / 5;
    d.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.validation.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
    // test sentences restate KB facts
    d.test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(n_test, all.size())));
    compute_dataset_fields(d);
    return d;
}

}  // namespace kgte::testing
