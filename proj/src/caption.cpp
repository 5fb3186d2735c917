// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <regex>

#include "vidcus/cus_factory.hpp"

namespace vidcus::factory {

void CaptionRecord::validate() const {
  if (subjects.size() != spans.size() || (!bboxes.empty() && bboxes.size() != spans.size())) {
    throw InvalidRecord("caption record subject/span/bbox counts differ");
  }
  int last_end = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& s = spans[i];
    if (s.start < 0 || s.end > static_cast<int>(caption.size()) || s.start >= s.end) {
      throw InvalidRecord("caption span out of bounds");
    }
    if (s.start < last_end) throw InvalidRecord("caption spans overlap or are not ascending");
    last_end = s.end;
  }
}

std::string strip_prefix(const std::string& caption, bool* missing) {
  const std::string prefix = kCaptionPrefix;
  const bool has = caption.rfind(prefix, 0) == 0;
  if (missing) *missing = !has;
  return has ? caption.substr(prefix.size()) : caption;
}

LabeledCaption rewrite_caption(const CaptionRecord& record, std::vector<int> labeled) {
  record.validate();
  LabeledCaption out;
  const std::string body = strip_prefix(record.caption, &out.prefix_missing);
  const int offset = static_cast<int>(record.caption.size() - body.size());
  if (labeled.empty()) {
    for (std::size_t i = 0; i < record.spans.size(); ++i) labeled.push_back(static_cast<int>(i));
  }
  std::sort(labeled.begin(), labeled.end());
  labeled.erase(std::unique(labeled.begin(), labeled.end()), labeled.end());
  for (int i : labeled) {
    if (i < 0 || i >= static_cast<int>(record.spans.size())) throw InvalidArgument("labelled subject index out of range");
  }

  int cursor = 0;  // in body coordinates
  int label = 0;
  for (std::size_t i = 0; i < record.spans.size(); ++i) {
    const Span s{record.spans[i].start - offset, record.spans[i].end - offset};
    if (s.start < 0) throw InvalidRecord("subject span lies inside the caption prefix");
    out.text += body.substr(static_cast<std::size_t>(cursor), static_cast<std::size_t>(s.start - cursor));
    const int start = static_cast<int>(out.text.size());
    out.text += body.substr(static_cast<std::size_t>(s.start), static_cast<std::size_t>(s.end - s.start));
    out.spans.push_back({start, static_cast<int>(out.text.size())});
    if (std::binary_search(labeled.begin(), labeled.end(), static_cast<int>(i))) {
      out.text += " IMG" + std::to_string(++label);
      out.labeled.push_back(static_cast<int>(i));
    }
    cursor = s.end;
  }
  out.text += body.substr(static_cast<std::size_t>(cursor));
  return out;
}

std::string strip_labels(const std::string& text) {
  static const std::regex label(R"(\s*\bIMG\d+\b)");
  std::string out = std::regex_replace(text, label, "");
  const auto first = out.find_first_not_of(' ');
  if (first == std::string::npos) return "";
  return out.substr(first);
}

std::vector<int> filter_subjects(const std::vector<SubjectTrack>& tracks, const FilterOptions& o) {
  for (double v : {o.min_coverage, o.min_frame_fraction, o.background_ceiling}) {
    if (!(v > 0.0 && v <= 1.0)) throw InvalidArgument("filter thresholds must lie in (0, 1]");
  }
  std::vector<int> kept;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& cov = tracks[i].coverage;
    if (cov.empty()) continue;
    double present = 0.0, mean = 0.0;
    for (double c : cov) {
      if (c >= o.min_coverage) present += 1.0;
      mean += c;
    }
    present /= static_cast<double>(cov.size());
    mean /= static_cast<double>(cov.size());
    if (present >= o.min_frame_fraction && mean <= o.background_ceiling) kept.push_back(static_cast<int>(i));
  }
  return kept;
}

}  // namespace vidcus::factory
