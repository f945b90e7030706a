#include <array>
#include <cmath>
#include <set>
#include <string>

#include "labelforge/corpus.hpp"
#include "labelforge/error.hpp"
#include "labelforge/util.hpp"

namespace labelforge {

namespace {

constexpr std::array<const char*, 32> kSyllables = {
    "ba", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "qui", "ra", "se", "ti", "vo",
    "za", "bre", "cla", "dro", "fle", "gri", "plo", "stra", "tor", "vin", "mar", "len", "sol", "ter",
    "quo", "nex"};

constexpr std::array<const char*, 6> kVenuePatterns = {
    "Journal of {}", "{} Letters", "Annals of {}", "{} Review", "Advances in {}", "{} Reports"};

std::string pseudo_word(Rng& rng) {
  std::string word;
  const auto syllables = 2 + rng.below(2);
  for (std::uint64_t i = 0; i < syllables; ++i) word += kSyllables[rng.below(kSyllables.size())];
  return word;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

/// Draws a term not seen before. One or two pseudo-words.
std::string fresh_term(Rng& rng, std::set<std::string>& used) {
  for (;;) {
    std::string term = pseudo_word(rng);
    if (rng.below(2) == 1) term += " " + pseudo_word(rng);
    if (used.insert(term).second) return term;
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_clusters < 1 || docs_per_cluster < 1 || vocab_per_cluster < 1) {
    throw ValidationError("synthetic spec counts must be >= 1");
  }
}

SyntheticCorpus synthesize_corpus(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0x5EEDC0DE));
  SyntheticCorpus out;
  std::set<std::string> used_terms;

  for (std::size_t s = 0; s < spec.shared_vocab; ++s) {
    out.shared_terms.push_back(fresh_term(rng, used_terms));
  }

  std::vector<std::string> cluster_ids;
  std::map<std::string, std::vector<std::string>> venues;
  std::set<std::string> used_venues;
  for (std::size_t k = 1; k <= spec.n_clusters; ++k) {
    const std::string cid = "c" + std::to_string(k);
    cluster_ids.push_back(cid);
    auto& vocab = out.vocabulary[cid];
    for (std::size_t t = 0; t < spec.vocab_per_cluster; ++t) {
      vocab.push_back(fresh_term(rng, used_terms));
    }
    const auto n_venues = 2 + rng.below(3);
    for (std::uint64_t v = 0; v < n_venues; ++v) {
      std::string name;
      do {
        std::string pattern = kVenuePatterns[rng.below(kVenuePatterns.size())];
        name = pattern.replace(pattern.find("{}"), 2, capitalize(pseudo_word(rng)));
      } while (!used_venues.insert(name).second);
      venues[cid].push_back(name);
    }
  }

  std::vector<Document> docs;
  std::map<std::string, std::string> assignment;
  docs.reserve(spec.n_clusters * spec.docs_per_cluster);
  const std::size_t n_docs = spec.docs_per_cluster;

  for (std::size_t k = 0; k < spec.n_clusters; ++k) {
    const std::string& cid = cluster_ids[k];
    const auto& vocab = out.vocabulary.at(cid);
    const auto& cluster_venues = venues.at(cid);
    for (std::size_t d = 0; d < n_docs; ++d) {
      Document doc;
      doc.id = cid + "-d" + std::to_string(d + 1);
      doc.field_tag = "SYN-" + std::to_string(spec.seed);
      doc.year = 2015 + static_cast<int>(rng.below(9));

      // Dominant term in every document, so its cluster frequency is maximal.
      doc.concepts.push_back({vocab[0], round3(0.8 + 0.2 * rng.uniform())});
      for (std::size_t t = 1; t < vocab.size(); ++t) {
        const double p = 0.85 * (1.0 - static_cast<double>(t) / static_cast<double>(vocab.size() + 1));
        bool include = rng.uniform() < p;
        // Keep every secondary term strictly below the dominant term's count.
        if (n_docs > 1 && d == (t - 1) % n_docs) include = false;
        if (n_docs == 1 || (n_docs > 1 && d == t % n_docs)) include = true;
        if (!include) continue;
        const double relevance = n_docs == 1 ? round3(0.4 * rng.uniform())
                                             : round3(0.5 + 0.5 * rng.uniform());
        doc.concepts.push_back({vocab[t], relevance});
      }
      for (std::size_t s = 0; s < out.shared_terms.size(); ++s) {
        const bool forced = d == s % n_docs;
        if (forced || rng.uniform() < 0.5) {
          doc.concepts.push_back({out.shared_terms[s], round3(0.5 + 0.5 * rng.uniform())});
        }
      }
      // Occasional low-relevance concept borrowed from another cluster.
      if (spec.n_clusters > 1 && rng.uniform() < 0.3) {
        const auto other = (k + 1 + rng.below(spec.n_clusters - 1)) % spec.n_clusters;
        const auto& other_vocab = out.vocabulary.at(cluster_ids[other]);
        doc.concepts.push_back(
            {other_vocab[rng.below(other_vocab.size())], round3(0.45 * rng.uniform())});
      }

      const auto& a = vocab[rng.below(vocab.size())];
      const auto& b = vocab[rng.below(vocab.size())];
      doc.title = capitalize(a) + " and " + b + " in " + pseudo_word(rng) + " systems (" +
                  std::to_string(d + 1) + ")";
      if (rng.uniform() < 0.5) {
        doc.abstract = "We study " + a + " with respect to " + b + ".";
      }
      // Skewed venue choice: the first venue dominates.
      const double u = rng.uniform();
      doc.venue = cluster_venues[u < 0.5 ? 0 : rng.below(cluster_venues.size())];
      doc.citation_score = round3(-2.0 * std::log(1.0 - rng.uniform()));

      assignment.emplace(doc.id, cid);
      out.assignment_log[cid].push_back(doc.id);
      docs.push_back(std::move(doc));
    }
  }

  out.corpus = ClusteredCorpus::build(std::move(docs), std::move(assignment));
  return out;
}

}  // namespace labelforge
