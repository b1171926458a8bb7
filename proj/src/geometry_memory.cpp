#include "geoloop/geometry_memory.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "geoloop/errors.hpp"

namespace geoloop {

void ViewBank::add(CaptureFrame frame) {
  if (find(frame.camera.view_id) != nullptr) {
    throw SchemaError("view bank: duplicate view_id " +
                      std::to_string(frame.camera.view_id));
  }
  frames.push_back(std::move(frame));
}

const CaptureFrame* ViewBank::find(int view_id) const {
  for (const CaptureFrame& f : frames) {
    if (f.camera.view_id == view_id) return &f;
  }
  return nullptr;
}

std::vector<int> ViewBank::view_ids() const {
  std::vector<int> ids;
  ids.reserve(frames.size());
  for (const CaptureFrame& f : frames) ids.push_back(f.camera.view_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

GeoMemory init_from_captures(const ViewBank& bank, int stride) {
  if (bank.empty()) throw SchemaError("init_from_captures: empty view bank");
  if (stride < 1) throw SchemaError("init_from_captures: stride must be >= 1");

  // Frame order by view_id makes construction independent of insertion order.
  std::vector<const CaptureFrame*> ordered;
  ordered.reserve(bank.size());
  for (const CaptureFrame& f : bank.frames) ordered.push_back(&f);
  std::sort(ordered.begin(), ordered.end(),
            [](const CaptureFrame* a, const CaptureFrame* b) {
              return a->camera.view_id < b->camera.view_id;
            });

  GeoMemory mem;
  mem.stride = stride;
  for (const CaptureFrame* frame : ordered) {
    const Camera& cam = frame->camera;
    if (frame->depth.width != cam.intrinsics.width ||
        frame->depth.height != cam.intrinsics.height) {
      throw SchemaError("init_from_captures: view " +
                        std::to_string(cam.view_id) +
                        " depth size does not match intrinsics");
    }
    for (int y = 0; y < frame->depth.height; y += stride) {
      for (int x = 0; x < frame->depth.width; x += stride) {
        const float d = frame->depth.at(x, y);
        if (!(d > 0.0f)) continue;
        GeoPoint pt;
        pt.position = unproject(cam, x, y, d);
        pt.color = frame->color.get(x, y);
        pt.source_view_id = cam.view_id;
        mem.points.push_back(pt);
      }
    }
  }
  return mem;
}

GeoMemory update_memory(const GeoMemory& mem, const ViewBank& new_bank) {
  if (new_bank.empty()) throw SchemaError("update_memory: empty view bank");
  GeoMemory rebuilt = init_from_captures(new_bank, mem.stride);
  rebuilt.generation_counter = mem.generation_counter + 1;
  return rebuilt;
}

std::vector<std::size_t> source_subset(const GeoMemory& mem, int view_id) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < mem.points.size(); ++i) {
    if (mem.points[i].source_view_id == view_id) indices.push_back(i);
  }
  return indices;
}

void save_ply(const std::string& path, const GeoMemory& mem) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "ply\n"
      << "format ascii 1.0\n"
      << "comment generation_counter " << mem.generation_counter << "\n"
      << "comment stride " << mem.stride << "\n"
      << "element vertex " << mem.points.size() << "\n"
      << "property double x\n"
      << "property double y\n"
      << "property double z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "property int source_view\n"
      << "end_header\n";
  out.precision(17);
  for (const GeoPoint& p : mem.points) {
    out << p.position.x() << " " << p.position.y() << " " << p.position.z()
        << " " << static_cast<int>(p.color[0]) << " "
        << static_cast<int>(p.color[1]) << " " << static_cast<int>(p.color[2])
        << " " << p.source_view_id << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

GeoMemory load_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  GeoMemory mem;
  std::string line;
  std::size_t vertex_count = 0;
  std::vector<std::string> properties;
  bool header_done = false;

  if (!std::getline(in, line) || line != "ply") {
    throw SchemaError(path + ": not a PLY file");
  }
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw SchemaError(path + ": only ascii PLY supported");
    } else if (tok == "comment") {
      std::string key;
      ls >> key;
      if (key == "generation_counter") ls >> mem.generation_counter;
      if (key == "stride") ls >> mem.stride;
    } else if (tok == "element") {
      std::string name;
      ls >> name >> vertex_count;
      if (name != "vertex") {
        throw SchemaError(path + ": unsupported element '" + name + "'");
      }
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      properties.push_back(name);
    } else if (tok == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw SchemaError(path + ": missing end_header");
  const std::vector<std::string> expected = {"x",    "y",    "z",          "red",
                                             "green", "blue", "source_view"};
  if (properties != expected) {
    throw SchemaError(path + ": unexpected property layout");
  }

  mem.points.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!std::getline(in, line)) {
      throw SchemaError(path + ": truncated vertex data");
    }
    std::istringstream ls(line);
    GeoPoint p;
    int r, g, b;
    if (!(ls >> p.position.x() >> p.position.y() >> p.position.z() >> r >> g >>
          b >> p.source_view_id)) {
      throw SchemaError(path + ": bad vertex line " + std::to_string(i));
    }
    p.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
               static_cast<std::uint8_t>(b)};
    mem.points.push_back(p);
  }
  return mem;
}

}  // namespace geoloop
