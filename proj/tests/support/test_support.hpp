#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "labelforge/characteristics.hpp"
#include "labelforge/corpus.hpp"
#include "labelforge/labeler.hpp"
#include "labelforge/util.hpp"

namespace lf_test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path data_dir();
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

labelforge::Document make_doc(std::string id, std::vector<std::pair<std::string, double>> concepts,
                              std::string venue = "Venue", double citation = 1.0,
                              std::string title = {});

/// Builds a corpus from (document, cluster id) pairs.
labelforge::ClusteredCorpus make_corpus(
    const std::vector<std::pair<labelforge::Document, std::string>>& docs);

/// Brute-force TF-IDF: counts every (cluster, term) occurrence surviving the
/// threshold and recomputes df by scanning all clusters for each term.
std::map<std::string, std::map<std::string, double>> tfidf_oracle(
    const labelforge::ClusteredCorpus& corpus, const labelforge::CharacteristicsConfig& config);

/// Random corpus with at most 5 clusters and at most 50 distinct terms.
labelforge::ClusteredCorpus random_small_corpus(labelforge::Rng& rng);

/// Random string of printable ASCII and multi-byte UTF-8 scalars with a
/// chosen scalar count.
std::string random_utf8(labelforge::Rng& rng, std::size_t scalars);

/// Label set over clusters "c1".."cN" with the given labels.
labelforge::LabelSet make_label_set(std::string run_id, const std::vector<std::string>& labels);

}  // namespace lf_test
