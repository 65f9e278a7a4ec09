#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fsp/geometry.hpp"

using namespace fsp;

namespace {

DeformSpec standard_deform(double a) {
    DeformSpec d;
    d.amplitude = a;
    return d;
}

}  // namespace

TEST_CASE("undeformed sampling gives the tensor lattice of the box") {
    auto m = sample_analytic_mapping(standard_deform(0.0), Box{}, 3, NodeKind::lobatto);
    const auto& ns = cached_node_set(NodeKind::lobatto, 3);
    for (int j = 0; j <= 3; ++j)
        for (int k = 0; k <= 3; ++k)
            for (int l = 0; l <= 3; ++l) {
                CHECK(m.xyz[0](j, k, l) == doctest::Approx(0.5 * (ns.nodes[j] + 1.0)));
                CHECK(m.xyz[1](j, k, l) == doctest::Approx(0.5 * (ns.nodes[k] + 1.0)));
                CHECK(m.xyz[2](j, k, l) == doctest::Approx(0.5 * (ns.nodes[l] + 1.0)));
            }
}

TEST_CASE("moderate deformation keeps all Jacobians positive on a 4x4x4 split") {
    auto spec = standard_deform(0.05);
    for (int ix = 0; ix < 4; ++ix)
        for (int iy = 0; iy < 4; ++iy)
            for (int iz = 0; iz < 4; ++iz) {
                Box box{{ix / 4.0, iy / 4.0, iz / 4.0},
                        {(ix + 1) / 4.0, (iy + 1) / 4.0, (iz + 1) / 4.0}};
                auto m = sample_analytic_mapping(spec, box, 4, NodeKind::lobatto);
                for (double j : nodal_jacobians(m)) CHECK(j > 0.0);
            }
}

TEST_CASE("huge deformation raises the inverted-element error") {
    CHECK_THROWS_AS(sample_analytic_mapping(standard_deform(10.0), Box{}, 4, NodeKind::lobatto),
                    std::runtime_error);
}

TEST_CASE("face extraction matches the volume mapping on each reference face") {
    auto m = sample_analytic_mapping(standard_deform(0.05), Box{{0, 0, 0}, {0.5, 0.5, 0.5}}, 2,
                                     NodeKind::lobatto);
    auto faces = extract_faces(m);

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int side = 1; side <= 6; ++side) {
        int axis = face_axis(side);
        int sign = face_sign(side);
        for (int rep = 0; rep < 10; ++rep) {
            double r = u(rng), s = u(rng);
            double ref[3];
            ref[axis] = sign;
            if (axis == 0) {
                ref[1] = r; ref[2] = s;
            } else if (axis == 1) {
                ref[0] = r; ref[2] = s;
            } else {
                ref[0] = r; ref[1] = s;
            }
            Vec3 from_patch = evaluate(faces[side - 1], r, s);
            Vec3 from_volume = evaluate(m, ref[0], ref[1], ref[2]);
            CHECK(max_abs(from_patch - from_volume) <= 1e-13);
        }
    }
}

TEST_CASE("face extraction with interior (gauss) geometry nodes agrees with the volume") {
    auto m = sample_analytic_mapping(standard_deform(0.05), Box{{0, 0, 0}, {0.5, 0.5, 0.5}}, 3,
                                     NodeKind::gauss);
    auto faces = extract_faces(m);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int side = 1; side <= 6; ++side) {
        int axis = face_axis(side);
        int sign = face_sign(side);
        double r = u(rng), s = u(rng);
        double ref[3];
        ref[axis] = sign;
        if (axis == 0) {
            ref[1] = r; ref[2] = s;
        } else if (axis == 1) {
            ref[0] = r; ref[2] = s;
        } else {
            ref[0] = r; ref[1] = s;
        }
        CHECK(max_abs(evaluate(faces[side - 1], r, s) - evaluate(m, ref[0], ref[1], ref[2])) <=
              1e-13);
    }
}

TEST_CASE("identity mapping yields planar box faces") {
    auto m = sample_analytic_mapping(standard_deform(0.0), Box{}, 2, NodeKind::lobatto);
    auto faces = extract_faces(m);
    // side 6 is xi=-1, the x=0 plane of the unit box.
    for (int p = 0; p <= 2; ++p)
        for (int q = 0; q <= 2; ++q) CHECK(faces[5].xyz[0](p, q) == doctest::Approx(0.0));
    for (int p = 0; p <= 2; ++p)
        for (int q = 0; q <= 2; ++q) CHECK(faces[3].xyz[0](p, q) == doctest::Approx(1.0));
    for (int p = 0; p <= 2; ++p)
        for (int q = 0; q <= 2; ++q) CHECK(faces[0].xyz[2](p, q) == doctest::Approx(0.0));
}

TEST_CASE("child face patch represents the same surface piece") {
    // Parent: graph of a degree-3 polynomial over the (r,s) square.
    const int ng = 3;
    const auto& ns = cached_node_set(NodeKind::lobatto, ng);
    FacePatch parent;
    parent.degree = ng;
    parent.kind = NodeKind::lobatto;
    for (int c = 0; c < 3; ++c) parent.xyz[c] = Grid2(ng + 1, ng + 1);
    auto height = [](double r, double s) {
        return 0.3 * r * r * s - 0.1 * s * s * s + 0.25 * r + 0.07;
    };
    for (int i = 0; i <= ng; ++i)
        for (int j = 0; j <= ng; ++j) {
            parent.xyz[0](i, j) = ns.nodes[i];
            parent.xyz[1](i, j) = ns.nodes[j];
            parent.xyz[2](i, j) = height(ns.nodes[i], ns.nodes[j]);
        }

    auto child2 = child_face_patch(parent, 2);
    Vec3 at_origin = evaluate(child2, 0.0, 0.0);
    Vec3 expect = evaluate(parent, 0.5, -0.5);
    CHECK(max_abs(at_origin - expect) <= 1e-13);

    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int quadrant = 1; quadrant <= 4; ++quadrant) {
        auto child = child_face_patch(parent, quadrant);
        double off_r = (quadrant - 1) % 2 ? 0.5 : -0.5;
        double off_s = (quadrant - 1) / 2 ? 0.5 : -0.5;
        double worst = 0.0;
        for (int rep = 0; rep < 25; ++rep) {
            double r = u(rng), s = u(rng);
            Vec3 a = evaluate(child, r, s);
            Vec3 b = evaluate(parent, 0.5 * r + off_r, 0.5 * s + off_s);
            worst = std::max(worst, max_abs(a - b));
        }
        CHECK(worst <= 1e-13);
    }
}

TEST_CASE("subdivision produces eight watertight children of the same degree") {
    auto parent = sample_analytic_mapping(standard_deform(0.05), Box{{0, 0, 0}, {0.5, 0.5, 0.5}},
                                          4, NodeKind::lobatto);
    auto children = subdivide_element(parent);

    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int o = 0; o < 8; ++o) {
        const auto& ch = children[o];
        CHECK(ch.mapping.degree == parent.degree);
        CHECK(ch.submap.alpha[0] == 0.5);
        CHECK(ch.submap.beta == 0.25);
        CHECK(face_beta(ch.submap, 0) == 0.25);

        // Degree preservation: the child polynomial reproduces parent
        // evaluations at random mapped points.
        for (int rep = 0; rep < 100; ++rep) {
            double xi = u(rng), eta = u(rng), zeta = u(rng);
            Vec3 a = evaluate(ch.mapping, xi, eta, zeta);
            Vec3 b = evaluate(parent, 0.5 * xi + ch.submap.offset[0],
                              0.5 * eta + ch.submap.offset[1], 0.5 * zeta + ch.submap.offset[2]);
            CHECK(max_abs(a - b) <= 1e-13);
        }

        // Outermost corner coincides with the parent corner.
        double cx = ch.submap.offset[0] > 0 ? 1.0 : -1.0;
        double cy = ch.submap.offset[1] > 0 ? 1.0 : -1.0;
        double cz = ch.submap.offset[2] > 0 ? 1.0 : -1.0;
        CHECK(max_abs(evaluate(ch.mapping, cx, cy, cz) - evaluate(parent, cx, cy, cz)) <= 1e-13);
    }
}

TEST_CASE("child volume faces coincide with quadrants of the parent face") {
    auto parent = sample_analytic_mapping(standard_deform(0.05), Box{{0.5, 0, 0}, {1, 0.5, 0.5}},
                                          4, NodeKind::lobatto);
    auto parent_faces = extract_faces(parent);
    auto children = subdivide_element(parent);

    // The xi=-1 face (side 6) of the parent splits into the xi=-1 faces of the
    // four octants with bit0 = 0; their (eta, zeta) halves give the quadrant.
    for (int o : {0, 2, 4, 6}) {
        auto child_faces = extract_faces(children[o].mapping);
        int quadrant = 1 + ((o & 2) ? 1 : 0) + ((o & 4) ? 2 : 0);
        auto expect = child_face_patch(parent_faces[5], quadrant);
        double worst = 0.0;
        for (int c = 0; c < 3; ++c)
            for (size_t i = 0; i < expect.xyz[c].v.size(); ++i)
                worst = std::max(worst,
                                 std::abs(expect.xyz[c].v[i] - child_faces[5].xyz[c].v[i]));
        CHECK(worst <= 1e-13);
    }
}

TEST_CASE("extruded deformation leaves z affine") {
    DeformSpec spec;
    spec.amplitude = 0.08;
    spec.extruded = true;
    auto m = sample_analytic_mapping(spec, Box{{0, 0, 0}, {0.5, 0.5, 0.5}}, 4, NodeKind::lobatto);
    const auto& ns = cached_node_set(NodeKind::lobatto, 4);
    for (int j = 0; j <= 4; ++j)
        for (int k = 0; k <= 4; ++k)
            for (int l = 0; l <= 4; ++l)
                CHECK(m.xyz[2](j, k, l) == doctest::Approx(0.25 * (ns.nodes[l] + 1.0)));
}
