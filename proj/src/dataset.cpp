#include "biofuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace biofuse {

std::string to_string(Gender g) { return g == Gender::female ? "F" : "M"; }

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

Gender gender_from_string(const std::string& s) {
  if (s == "F" || s == "f") return Gender::female;
  if (s == "M" || s == "m") return Gender::male;
  throw DataError("unknown gender '" + s + "' (expected F or M)");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + s + "' (expected train/val/test)");
}

AgeGroup bin_age(int age_years) {
  if (age_years < 18) {
    throw DataError("age " + std::to_string(age_years) +
                    " out of range: youngest group starts at 18");
  }
  if (age_years <= 28) return {0};
  if (age_years <= 38) return {1};
  if (age_years <= 48) return {2};
  if (age_years <= 58) return {3};
  return {4};
}

void SampleRecord::validate() const {
  if (sample_id.empty()) throw DataError("record with empty sample_id");
  if (subject_id.empty()) {
    throw DataError("record '" + sample_id + "' has empty subject_id");
  }
  if (age_years && *age_years < 18) {
    throw DataError("record '" + sample_id + "': age " +
                    std::to_string(*age_years) +
                    " out of range: youngest group starts at 18");
  }
  if (!age_years && !gender) {
    throw DataError("record '" + sample_id +
                    "' carries neither age nor gender label");
  }
}

DatasetManifest::DatasetManifest(std::vector<SampleRecord> records,
                                 std::string source_name)
    : records_(std::move(records)), source_name_(std::move(source_name)) {
  std::set<std::string> ids;
  for (const auto& r : records_) {
    r.validate();
    if (!ids.insert(r.sample_id).second) {
      throw DataError("duplicate sample_id '" + r.sample_id + "' in manifest");
    }
  }
}

std::vector<const SampleRecord*> DatasetManifest::split_records(
    Split split) const {
  std::vector<const SampleRecord*> out;
  for (const auto& r : records_) {
    if (r.split && *r.split == split) out.push_back(&r);
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

const char* kHeader = "sample_id,subject_id,ear_path,profile_path,age,gender,split";

}  // namespace

DatasetManifest DatasetManifest::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty manifest file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw DataError(path + " line 1: expected header '" + kHeader + "'");
  }

  std::vector<SampleRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 7) {
      throw DataError(path + " line " + std::to_string(lineno) + ": expected 7 cells, got " +
                      std::to_string(cells.size()));
    }
    SampleRecord r;
    r.sample_id = cells[0];
    r.subject_id = cells[1];
    r.ear_image_ref = cells[2];
    r.profile_image_ref = cells[3];
    try {
      if (!cells[4].empty()) r.age_years = std::stoi(cells[4]);
      if (!cells[5].empty()) r.gender = gender_from_string(cells[5]);
      if (!cells[6].empty()) r.split = split_from_string(cells[6]);
      r.validate();
    } catch (const std::exception& e) {
      throw DataError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  return DatasetManifest(std::move(records), path);
}

void DatasetManifest::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << kHeader << "\n";
  for (const auto& r : records_) {
    out << r.sample_id << ',' << r.subject_id << ',' << r.ear_image_ref << ','
        << r.profile_image_ref << ',';
    if (r.age_years) out << *r.age_years;
    out << ',';
    if (r.gender) out << to_string(*r.gender);
    out << ',';
    if (r.split) out << to_string(*r.split);
    out << '\n';
  }
}

namespace {

std::string strat_label(const SampleRecord& r, StratifyBy by) {
  if (by == StratifyBy::age) {
    if (!r.age_years) {
      throw DataError("record '" + r.sample_id +
                      "' lacks the age label used for stratification");
    }
    return "age_" + std::to_string(bin_age(*r.age_years).index);
  }
  if (!r.gender) {
    throw DataError("record '" + r.sample_id +
                    "' lacks the gender label used for stratification");
  }
  return "gender_" + to_string(*r.gender);
}

// floor allocation + largest remainder; remainder ties go to the lower
// split index so results are deterministic.
std::array<int, 3> class_targets(int count, const SplitRatios& ratios) {
  const double shares[3] = {ratios.train * count, ratios.val * count,
                            ratios.test * count};
  std::array<int, 3> target{};
  double rem[3];
  int assigned = 0;
  for (int s = 0; s < 3; ++s) {
    target[s] = static_cast<int>(std::floor(shares[s]));
    rem[s] = shares[s] - target[s];
    assigned += target[s];
  }
  int extras = count - assigned;
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return a < b;
  });
  for (int i = 0; i < extras; ++i) target[order[i]] += 1;
  return target;
}

}  // namespace

DatasetManifest stratified_split(const DatasetManifest& manifest,
                                 const SplitRatios& ratios, std::uint64_t seed,
                                 StratifyBy by, SplitReport* report) {
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1.0");
  }
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative");
  }
  if (manifest.size() == 0) throw DataError("cannot split an empty manifest");

  if (by == StratifyBy::automatic) {
    bool all_age = true, all_gender = true;
    for (const auto& r : manifest.records()) {
      all_age &= r.age_years.has_value();
      all_gender &= r.gender.has_value();
    }
    if (all_age) {
      by = StratifyBy::age;
    } else if (all_gender) {
      by = StratifyBy::gender;
    } else {
      throw DataError(
          "no label present on every record; cannot pick a stratification key");
    }
  }

  SplitReport local;
  SplitReport& rep = report ? *report : local;
  rep.per_class.clear();
  rep.warnings.clear();
  rep.totals = {0, 0, 0};

  // Per-class targets.
  std::map<std::string, int> class_count;
  for (const auto& r : manifest.records()) class_count[strat_label(r, by)]++;
  std::map<std::string, std::array<int, 3>> need;
  for (const auto& [label, count] : class_count) {
    if (count < 3) {
      rep.warnings.push_back("class " + label + " has only " +
                             std::to_string(count) +
                             " sample(s); assigning all to train");
      need[label] = {count, 0, 0};
    } else {
      need[label] = class_targets(count, ratios);
    }
  }

  // Group records by subject so one identity never spans two splits.
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    by_subject[manifest.records()[i].subject_id].push_back(i);
  }
  std::vector<std::string> subjects;
  subjects.reserve(by_subject.size());
  for (const auto& [sid, _] : by_subject) subjects.push_back(sid);

  Rng rng(seed);
  rng.shuffle(subjects);
  // Multi-sample subjects first (stable within equal sizes, preserving the
  // shuffled order) so they still fit their class targets.
  std::stable_sort(subjects.begin(), subjects.end(),
                   [&](const std::string& a, const std::string& b) {
                     return by_subject[a].size() > by_subject[b].size();
                   });

  DatasetManifest out = manifest;
  for (const auto& sid : subjects) {
    std::map<std::string, int> subj_classes;
    for (std::size_t idx : by_subject[sid]) {
      subj_classes[strat_label(manifest.records()[idx], by)]++;
    }
    // Pick the split that absorbs the most of this subject's samples without
    // overflowing class targets; ties prefer the larger remaining need for
    // the subject's dominant class, then the lower split index.
    int best_split = 0;
    long best_gain = -1;
    long best_need = -1;
    for (int s = 0; s < 3; ++s) {
      long gain = 0;
      long need_sum = 0;
      for (const auto& [label, cnt] : subj_classes) {
        gain += std::min<long>(need[label][s], cnt);
        need_sum += need[label][s];
      }
      if (gain > best_gain || (gain == best_gain && need_sum > best_need)) {
        best_gain = gain;
        best_need = need_sum;
        best_split = s;
      }
    }
    const Split assigned = static_cast<Split>(best_split);
    for (std::size_t idx : by_subject[sid]) {
      out.records()[idx].split = assigned;
      const std::string label = strat_label(manifest.records()[idx], by);
      need[label][best_split] = std::max(0, need[label][best_split] - 1);
      rep.per_class[label][best_split]++;
      rep.totals[best_split]++;
    }
  }
  return out;
}

PairingResult pair_modalities(const DatasetManifest& manifest, int target_h,
                              int target_w) {
  PairingResult result;
  for (const auto& r : manifest.records()) {
    ModalPair pair;
    pair.sample_id = r.sample_id;
    try {
      pair.profile = load_image(r.profile_image_ref, target_h, target_w);
      pair.ear = load_image(r.ear_image_ref, target_h, target_w);
    } catch (const IoError& e) {
      result.skipped.emplace_back(r.sample_id, e.what());
      continue;
    }
    if (r.age_years) pair.age_group = bin_age(*r.age_years);
    pair.gender = r.gender;
    pair.split = r.split;
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

}  // namespace biofuse
