// Lists every periodic orbit of period 2 to 4 in a scene, with its monodromy trace.
//
//   orbit_census samples/scenes/three_disks.yaml

#include "magbump/io/scene_file.hpp"
#include "magbump/symbolic.hpp"

#include <cstdio>

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s SCENE\n", argv[0]);
        return 2;
    }
    try {
        const magbump::Scene scene = magbump::io::load_scene(argv[1]);
        for (std::size_t p = 2; p <= 4; ++p) {
            for (const auto& word : magbump::enumerate_periodic_words(scene.size(), p)) {
                const auto orbit = magbump::find_periodic_orbit(scene, word);
                const auto m = magbump::monodromy(scene, orbit);
                std::printf("%-8s residual %.1e  trace %14.3f  %s\n", magbump::format_word(word).c_str(),
                            orbit.residual, m.trace, m.hyperbolic ? "hyperbolic" : "elliptic");
            }
        }
    } catch (const magbump::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
