#pragma once

#include <string>
#include <vector>

#include "socialfabric/geometry.hpp"

namespace socialfabric {

struct Video {
  std::string video_id;
  int num_frames = 0;
  std::vector<Tubelet> tubelets;
  std::vector<RelationInstance> gt;
};

struct Dataset {
  std::string suite;
  std::string split;
  std::vector<std::string> predicate_names;
  std::vector<std::string> category_names;
  std::vector<Video> videos;

  int num_predicates() const { return static_cast<int>(predicate_names.size()); }
  int num_categories() const { return static_cast<int>(category_names.size()); }
};

}  // namespace socialfabric
