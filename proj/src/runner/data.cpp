#include "gyronet/runner.hpp"
#include "gyronet/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace gyronet::runner {

std::vector<std::string> ingest_corpus(const std::string& path, bool keep_whitespace) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read corpus " + path);
    std::vector<std::string> tokens;
    try {
        text::for_each_char(in, [&](char32_t cp, std::uint64_t) {
            if (keep_whitespace || !text::is_whitespace(cp)) tokens.push_back(text::encode_utf8(cp));
        });
    } catch (const text::Utf8Error& e) {
        throw DataError(path + ": invalid UTF-8 at byte " + std::to_string(e.byte_offset()));
    }
    if (tokens.empty()) throw DataError(path + ": corpus has no tokens");
    return tokens;
}

std::vector<std::size_t> IntentDataset::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i >= holdout.size() || !holdout[i]) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> IntentDataset::holdout_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size() && i < holdout.size(); ++i) {
        if (holdout[i]) out.push_back(i);
    }
    return out;
}

void index_labels(IntentDataset& ds) {
    std::set<std::string> labels;
    for (const auto& r : ds.records) labels.insert(r.label);
    ds.labels.assign(labels.begin(), labels.end());
    ds.label_ids.clear();
    for (std::size_t i = 0; i < ds.labels.size(); ++i) ds.label_ids[ds.labels[i]] = i;
}

void split_dataset(IntentDataset& ds, double holdout_fraction, std::uint64_t seed) {
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw DataError("holdout fraction must lie in [0, 1)");
    index_labels(ds);
    std::vector<std::vector<std::size_t>> members(ds.labels.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i) members[ds.label_ids.at(ds.records[i].label)].push_back(i);

    const auto target = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(ds.records.size())));
    std::vector<std::size_t> counts(members.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t l = 0; l < members.size(); ++l) {
        const double exact = holdout_fraction * static_cast<double>(members[l].size());
        counts[l] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[l];
        remainders.emplace_back(exact - std::floor(exact), l);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) ++counts[remainders[i].second];

    std::mt19937_64 rng(seed);
    ds.holdout.assign(ds.records.size(), false);
    for (std::size_t l = 0; l < members.size(); ++l) {
        auto m = members[l];
        std::shuffle(m.begin(), m.end(), rng);
        if (counts[l] >= m.size()) {
            throw DataError("label '" + ds.labels[l] + "' has no training examples after the split (" +
                            std::to_string(m.size()) + " rows)");
        }
        for (std::size_t i = 0; i < counts[l]; ++i) ds.holdout[m[i]] = true;
    }
}

IntentDataset read_intent_tsv(std::istream& in, const std::string& source) {
    IntentDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.empty()) continue;
        const auto where = source + ":" + std::to_string(line_no);
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw DataError(where + ": expected 'utterance<TAB>label'");
        }
        IntentRecord r{line.substr(0, tab), line.substr(tab + 1)};
        if (r.utterance.empty()) throw DataError(where + ": empty utterance");
        if (r.label.empty()) throw DataError(where + ": empty label");
        try {
            text::decode_utf8(r.utterance);
            text::decode_utf8(r.label);
        } catch (const text::Utf8Error&) {
            throw DataError(where + ": invalid UTF-8");
        }
        ds.records.push_back(std::move(r));
    }
    if (ds.records.empty()) throw DataError(source + ": no records");
    index_labels(ds);
    ds.holdout.assign(ds.records.size(), false);
    return ds;
}

void write_intent_tsv(std::ostream& out, const IntentDataset& ds) {
    for (const auto& r : ds.records) out << r.utterance << '\t' << r.label << '\n';
}

IntentDataset load_intent_dataset(const std::string& path, double holdout_fraction, std::uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset " + path);
    auto ds = read_intent_tsv(in, path);
    split_dataset(ds, holdout_fraction, seed);
    return ds;
}

namespace {

// CJK unified ideographs give a supply of distinct single-character tokens.
std::string ideograph(std::size_t i) { return text::encode_utf8(static_cast<char32_t>(0x4E00 + i)); }

}  // namespace

IntentDataset generate_synthetic_intents(const SyntheticIntentOptions& o) {
    if (o.classes < 2) throw DataError("synthetic dataset needs at least 2 classes");
    if (o.per_class == 0) throw DataError("per_class must be positive");
    if (o.noise_min > o.noise_max) throw DataError("noise_min exceeds noise_max");
    if (!(o.composite_fraction >= 0.0 && o.composite_fraction < 1.0)) throw DataError("composite_fraction must lie in [0, 1)");
    auto composites = static_cast<std::size_t>(std::llround(o.composite_fraction * static_cast<double>(o.classes)));
    const std::size_t base = o.classes - composites;
    if (composites > 0 && base < 2) throw DataError("composite classes need at least 2 base classes");

    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<std::size_t> sig_size(2, 4);
    std::vector<std::vector<std::size_t>> signatures(base);
    std::size_t next = 0;
    for (auto& s : signatures) {
        const std::size_t k = sig_size(rng);
        for (std::size_t j = 0; j < k; ++j) s.push_back(next++);
    }
    if (next + (o.noise_max > 0 ? 1 : 0) > o.vocab_size) {
        throw DataError("vocab_size " + std::to_string(o.vocab_size) + " is too small for " + std::to_string(next) +
                        " disjoint signature tokens plus noise");
    }
    std::vector<std::size_t> ids(o.vocab_size);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);  // signature ids are not contiguous code points
    const std::size_t noise_count = o.vocab_size - next;

    std::vector<std::vector<std::size_t>> parents;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < base; ++c) {
        parents.push_back({c});
        names.push_back(std::to_string(c));
    }
    for (std::size_t j = 0; j < composites; ++j) {
        const std::size_t a = (2 * j) % base;
        const std::size_t b = (2 * j + 1) % base;
        parents.push_back({a, b});
        names.push_back(std::to_string(a) + "+" + std::to_string(b));
    }

    IntentDataset ds;
    std::uniform_int_distribution<std::size_t> noise_len(o.noise_min, o.noise_max);
    for (std::size_t i = 0; i < o.per_class; ++i) {
        for (std::size_t c = 0; c < o.classes; ++c) {
            std::vector<std::size_t> toks;
            for (std::size_t p : parents[c]) {
                const auto& sig = signatures[p];
                std::uniform_int_distribution<std::size_t> pick(0, sig.size() - 1);
                for (int j = 0; j < 2; ++j) toks.push_back(ids[sig[pick(rng)]]);
            }
            const std::size_t n = noise_count ? noise_len(rng) : 0;
            std::uniform_int_distribution<std::size_t> noise(next, o.vocab_size - 1);
            for (std::size_t j = 0; j < n; ++j) toks.push_back(ids[noise(rng)]);
            std::shuffle(toks.begin(), toks.end(), rng);
            std::string utt;
            for (auto t : toks) utt += ideograph(t);
            ds.records.push_back({utt, names[c]});
        }
    }
    index_labels(ds);
    ds.holdout.assign(ds.records.size(), false);
    return ds;
}

std::string generate_toy_corpus(std::size_t chars, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    // A lexicon of words over a 120-character alphabet; topics prefer their own words.
    const std::size_t alphabet = 120, words = 80, topics = 8;
    std::uniform_int_distribution<std::size_t> letter(0, alphabet - 1), len(1, 3);
    std::vector<std::string> lexicon;
    for (std::size_t w = 0; w < words; ++w) {
        std::string s;
        const std::size_t n = len(rng) + (w % 3 == 0);
        for (std::size_t j = 0; j < n; ++j) s += ideograph(letter(rng));
        lexicon.push_back(s);
    }
    std::vector<double> weights(words);
    std::uniform_int_distribution<std::size_t> topic_pick(0, topics - 1), sentence_len(4, 12);
    std::string out;
    std::size_t produced = 0;
    while (produced < chars) {
        const std::size_t topic = topic_pick(rng);
        for (std::size_t w = 0; w < words; ++w) {
            const double zipf = 1.0 / static_cast<double>(w % (words / topics) + 1);
            weights[w] = (w % topics == topic ? 8.0 : 1.0) * zipf;
        }
        std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
        const std::size_t n = sentence_len(rng);
        for (std::size_t j = 0; j < n && produced < chars; ++j) {
            const auto& w = lexicon[word(rng)];
            out += w;
            produced += text::decode_utf8(w).size();
        }
        out += "。\n";
        ++produced;
    }
    return out;
}

}  // namespace gyronet::runner
