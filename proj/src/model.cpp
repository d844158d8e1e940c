#include "btg/model.hpp"

#include <cstdio>
#include <fstream>

#include "btg/errors.hpp"

namespace btg {

void Model::save(std::ostream& out) const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", lambda);
  out << "btg-checkpoint v1\n";
  out << "lambda " << buf << '\n';
  out << "max-segments " << max_segments << '\n';
  tree_p.save(out);
  tree_q.save(out);
  seg_q.save(out);
  phrase.save(out);
}

void Model::load(std::istream& in) {
  std::string magic, version, key;
  if (!(in >> magic >> version) || magic != "btg-checkpoint" || version != "v1")
    throw DataError("unrecognized checkpoint header");
  if (!(in >> key >> lambda) || key != "lambda")
    throw DataError("bad checkpoint: expected lambda");
  if (!(in >> key >> max_segments) || key != "max-segments")
    throw DataError("bad checkpoint: expected max-segments");
  tree_p.load(in);
  tree_q.load(in);
  seg_q.load(in);
  phrase.load(in);
}

void Model::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  save(out);
}

Model Model::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  Model model;
  model.load(in);
  return model;
}

}  // namespace btg
