#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biofuse/common.hpp"
#include "biofuse/image.hpp"

namespace biofuse {

enum class Gender { female, male };
enum class Split { train, val, test };

constexpr int kNumAgeGroups = 5;

std::string to_string(Gender g);
std::string to_string(Split s);
Gender gender_from_string(const std::string& s);
Split split_from_string(const std::string& s);

// Five fixed age groups: 18-28, 29-38, 39-48, 49-58, 59+ (open-ended).
struct AgeGroup {
  int index = 0;
};

// Maps an age in years onto its group. Throws DataError below 18.
AgeGroup bin_age(int age_years);

// One labeled subject sample. At least one of age/gender must be present;
// ages below 18 are rejected at load.
struct SampleRecord {
  std::string sample_id;
  std::string subject_id;
  std::string ear_image_ref;
  std::string profile_image_ref;
  std::optional<int> age_years;
  std::optional<Gender> gender;
  std::optional<Split> split;

  void validate() const;
};

class DatasetManifest {
 public:
  DatasetManifest() = default;
  DatasetManifest(std::vector<SampleRecord> records, std::string source_name);

  const std::vector<SampleRecord>& records() const { return records_; }
  std::vector<SampleRecord>& records() { return records_; }
  const std::string& source_name() const { return source_name_; }
  std::size_t size() const { return records_.size(); }

  std::vector<const SampleRecord*> split_records(Split split) const;

  // CSV with header sample_id,subject_id,ear_path,profile_path,age,gender,split.
  // Empty cells are absent optionals; gender F/M; split train/val/test.
  // Parse errors name the offending 1-based line.
  static DatasetManifest load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

 private:
  std::vector<SampleRecord> records_;
  std::string source_name_;
};

enum class StratifyBy { age, gender, automatic };

struct SplitRatios {
  double train = 0.80;
  double val = 0.10;
  double test = 0.10;
};

struct SplitReport {
  // class label -> per-split counts (train, val, test)
  std::map<std::string, std::array<int, 3>> per_class;
  std::vector<std::string> warnings;
  std::array<int, 3> totals{0, 0, 0};
};

// Fills the split field of every record. Per-class counts in each split land
// within +/-1 of the requested fractions (when subjects do not force larger
// deviations), records of one subject never span two splits, and the result
// is deterministic for a fixed seed. A class with fewer samples than splits
// goes entirely to train with a warning.
DatasetManifest stratified_split(const DatasetManifest& manifest,
                                 const SplitRatios& ratios, std::uint64_t seed,
                                 StratifyBy by = StratifyBy::automatic,
                                 SplitReport* report = nullptr);

// A loaded profile/ear pair with propagated labels.
struct ModalPair {
  std::string sample_id;
  ImageTensor profile;
  ImageTensor ear;
  std::optional<AgeGroup> age_group;
  std::optional<Gender> gender;
  std::optional<Split> split;
};

struct PairingResult {
  std::vector<ModalPair> pairs;
  // sample_id -> reason, for every record skipped due to unreadable files
  std::vector<std::pair<std::string, std::string>> skipped;
};

// Loads both modalities for every record at target_h x target_w. Records with
// missing or unreadable files are skipped and listed in the result.
PairingResult pair_modalities(const DatasetManifest& manifest, int target_h,
                              int target_w);

}  // namespace biofuse
