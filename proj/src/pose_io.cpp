#include "posewatch/pose_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "posewatch/io_util.hpp"

namespace posewatch {

namespace {

constexpr std::size_t kMaxDiagnostics = 20;

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            out.emplace_back();
        } else {
            const auto e = field.find_last_not_of(" \t\r");
            out.push_back(field.substr(b, e - b + 1));
        }
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

bool parse_long(const std::string& s, long& out) {
    try {
        std::size_t pos = 0;
        out = std::stol(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

PoseFileSchema parse_header(const std::string& line, const std::string& path) {
    // "# posetrack v1 k=17 coords=pixel:1920x1080" or "... coords=normalized"
    PoseFileSchema schema;
    std::stringstream ss(line);
    std::string tok;
    bool saw_magic = false, saw_k = false, saw_coords = false;
    while (ss >> tok) {
        if (tok == "posetrack") saw_magic = true;
        else if (tok.rfind("k=", 0) == 0) {
            schema.k = std::stoi(tok.substr(2));
            saw_k = true;
        } else if (tok.rfind("coords=", 0) == 0) {
            const std::string c = tok.substr(7);
            if (c == "normalized") {
                schema.normalized = true;
            } else if (c.rfind("pixel:", 0) == 0) {
                schema.normalized = false;
                const auto x = c.find('x', 6);
                if (x == std::string::npos)
                    throw std::runtime_error(path + ": bad pixel dimensions in header: " + c);
                schema.frame_width = std::stod(c.substr(6, x - 6));
                schema.frame_height = std::stod(c.substr(x + 1));
            } else {
                throw std::runtime_error(path + ": unknown coordinate space: " + c);
            }
            saw_coords = true;
        }
    }
    if (!saw_magic || !saw_k || !saw_coords)
        throw std::runtime_error(path + ": missing or malformed posetrack header line");
    if (schema.k <= 0) throw std::runtime_error(path + ": header declares k <= 0");
    return schema;
}

}  // namespace

LoadResult load_pose_tracks(const std::string& path, int expected_k) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose file: " + path);

    std::string line;
    bool have_header = false;
    LoadResult res;

    // (video_id, person_id) -> frames
    std::map<std::pair<std::string, int>, std::vector<PoseFrame>> groups;

    std::size_t line_no = 0;
    auto reject = [&](const std::string& why) {
        res.report.records_rejected++;
        if (res.report.diagnostics.size() < kMaxDiagnostics)
            res.report.diagnostics.push_back(path + ":" + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!have_header && line.find("posetrack") != std::string::npos) {
                res.schema = parse_header(line, path);
                if (expected_k > 0 && res.schema.k != expected_k)
                    throw std::runtime_error(path + ": header k=" + std::to_string(res.schema.k) +
                                             ", expected k=" + std::to_string(expected_k));
                have_header = true;
            }
            continue;
        }
        if (!have_header) throw std::runtime_error(path + ": data before posetrack header");

        res.report.records_total++;
        const auto fields = split_csv(line);
        const int k = res.schema.k;
        const std::size_t n_with_conf = 3 + 3 * static_cast<std::size_t>(k);
        const std::size_t n_without = 3 + 2 * static_cast<std::size_t>(k);
        if (fields.size() != n_with_conf && fields.size() != n_without) {
            reject("expected " + std::to_string(n_without) + " or " + std::to_string(n_with_conf) +
                   " fields for k=" + std::to_string(k) + ", got " + std::to_string(fields.size()));
            continue;
        }
        const bool has_conf = fields.size() == n_with_conf;
        const int step = has_conf ? 3 : 2;

        PoseFrame frame;
        long fidx = 0, pid = 0;
        if (!parse_long(fields[1], fidx) || fidx < 0 || !parse_long(fields[2], pid)) {
            reject("bad frame_index or person_id");
            continue;
        }
        frame.frame_index = fidx;
        frame.keypoints.reserve(k);
        bool ok = true;
        for (int i = 0; i < k; ++i) {
            Keypoint kp;
            if (!parse_double(fields[3 + i * step], kp.x) ||
                !parse_double(fields[3 + i * step + 1], kp.y)) {
                ok = false;
                break;
            }
            frame.keypoints.push_back(kp);
        }
        if (!ok) {
            reject("non-numeric or non-finite coordinate");
            continue;
        }
        groups[{fields[0], static_cast<int>(pid)}].push_back(std::move(frame));
    }

    if (res.report.records_total == res.report.records_rejected)
        throw std::runtime_error(path + ": no valid pose records");

    for (auto& [key, frames] : groups) {
        std::sort(frames.begin(), frames.end(),
                  [](const PoseFrame& a, const PoseFrame& b) { return a.frame_index < b.frame_index; });
        // Duplicate frame indices within a track would break the
        // strictly-increasing invariant; keep the first occurrence.
        std::vector<PoseFrame> dedup;
        dedup.reserve(frames.size());
        for (auto& f : frames) {
            if (!dedup.empty() && dedup.back().frame_index == f.frame_index) {
                res.report.records_rejected++;
                if (res.report.diagnostics.size() < kMaxDiagnostics)
                    res.report.diagnostics.push_back(path + ": duplicate frame " +
                                                     std::to_string(f.frame_index) + " for " + key.first +
                                                     "/" + std::to_string(key.second));
                continue;
            }
            dedup.push_back(std::move(f));
        }
        PoseTrack track;
        track.video_id = key.first;
        track.person_id = key.second;
        track.frames = std::move(dedup);
        res.tracks.push_back(std::move(track));
    }
    return res;
}

void save_pose_tracks(const std::string& path, const std::vector<PoseTrack>& tracks,
                      const PoseFileSchema& schema) {
    std::string body;
    {
        char header[128];
        if (schema.normalized) {
            std::snprintf(header, sizeof(header), "# posetrack v1 k=%d coords=normalized\n", schema.k);
        } else {
            std::snprintf(header, sizeof(header), "# posetrack v1 k=%d coords=pixel:%gx%g\n", schema.k,
                          schema.frame_width, schema.frame_height);
        }
        body += header;
    }
    char buf[64];
    for (const auto& t : tracks) {
        for (const auto& f : t.frames) {
            body += t.video_id;
            std::snprintf(buf, sizeof(buf), ",%ld,%d", f.frame_index, t.person_id);
            body += buf;
            for (const auto& kp : f.keypoints) {
                std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", kp.x, kp.y);
                body += buf;
            }
            body += '\n';
        }
    }
    write_file_atomic(path, body);
}

PoseTrack normalize_coordinates(const PoseTrack& track, double frame_width, double frame_height,
                                std::size_t* clamped_out) {
    if (frame_width <= 0.0 || frame_height <= 0.0)
        throw std::invalid_argument("normalize_coordinates: frame dimensions must be positive");
    PoseTrack out = track;
    std::size_t clamped = 0;
    for (auto& f : out.frames) {
        for (auto& kp : f.keypoints) {
            double x = kp.x / frame_width;
            double y = kp.y / frame_height;
            if (x < 0.0 || x > 1.0) { x = std::clamp(x, 0.0, 1.0); ++clamped; }
            if (y < 0.0 || y > 1.0) { y = std::clamp(y, 0.0, 1.0); ++clamped; }
            kp.x = x;
            kp.y = y;
        }
    }
    if (clamped_out) *clamped_out = clamped;
    return out;
}

Matrix relative_pose(const Matrix& window_absolute) {
    Matrix rel(window_absolute.rows, window_absolute.cols);
    const double* first = window_absolute.row(0);
    for (int t = 0; t < window_absolute.rows; ++t) {
        const double* abs_row = window_absolute.row(t);
        double* rel_row = rel.row(t);
        for (int j = 0; j < window_absolute.cols; ++j) rel_row[j] = abs_row[j] - first[j];
    }
    return rel;
}

std::vector<PoseWindow> extract_windows(const PoseTrack& track, int beta, int stride) {
    if (beta < 2 || beta % 2 != 0)
        throw std::invalid_argument("extract_windows: beta must be even and >= 2");
    if (stride < 1) throw std::invalid_argument("extract_windows: stride must be >= 1");

    std::vector<PoseWindow> out;
    const int n = static_cast<int>(track.frames.size());
    if (n < beta) return out;
    const int k = track.keypoint_count();

    // Walk runs of consecutive frame indices; emit windows per run.
    int run_begin = 0;
    for (int i = 1; i <= n; ++i) {
        const bool run_ends =
            i == n || track.frames[i].frame_index != track.frames[i - 1].frame_index + 1;
        if (!run_ends) continue;
        const int run_len = i - run_begin;
        for (int s = 0; s + beta <= run_len; s += stride) {
            const int base = run_begin + s;
            PoseWindow w;
            w.video_id = track.video_id;
            w.person_id = track.person_id;
            w.start_frame = track.frames[base].frame_index;
            w.beta = beta;
            w.k = k;
            w.absolute.reshape(beta, 2 * k);
            for (int t = 0; t < beta; ++t) {
                const auto& kps = track.frames[base + t].keypoints;
                double* row = w.absolute.row(t);
                for (int kp = 0; kp < k; ++kp) {
                    row[kp] = kps[kp].x;
                    row[k + kp] = kps[kp].y;
                }
            }
            w.relative = relative_pose(w.absolute);
            out.push_back(std::move(w));
        }
        run_begin = i;
    }
    return out;
}

std::vector<std::pair<int, int>> find_future_pairs(const std::vector<PoseWindow>& windows) {
    std::map<std::tuple<std::string, int, long>, int> index;
    for (int i = 0; i < static_cast<int>(windows.size()); ++i)
        index[{windows[i].video_id, windows[i].person_id, windows[i].start_frame}] = i;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < static_cast<int>(windows.size()); ++i) {
        const auto& w = windows[i];
        const auto it = index.find({w.video_id, w.person_id, w.start_frame + w.beta});
        if (it != index.end()) pairs.emplace_back(i, it->second);
    }
    return pairs;
}

}  // namespace posewatch
