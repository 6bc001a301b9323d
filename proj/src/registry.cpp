#include "sofctl/registry.hpp"

#include "sofctl/error.hpp"

namespace sofctl {

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
    const auto r = static_cast<Index>(values.size());
    const auto c = static_cast<Index>(values.begin()->size());
    Matrix m(r, c);
    Index i = 0;
    for (const auto& row : values) {
        Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Example example1() {
    Example ex;
    ex.name = "example1";
    ex.provenance =
        "third-order single-input plant with two outputs (Anderson and Moore, 1975); "
        "Q = diag(1, 3, 0.1), R = 1e-4; published gain F = [6.8981 84.9224]";
    auto& sys = ex.file.system;
    sys.A = rows({{0, 1, 0}, {0, 1, 1}, {0, 13, 0}});
    sys.B = rows({{0}, {0}, {1}});
    sys.C = rows({{0, 5, -1}, {-1, -1, 0}});
    sys.mode = SystemMode::NoD;
    ex.file.Q = rows({{1, 0, 0}, {0, 3, 0}, {0, 0, 0.1}});
    ex.file.R = rows({{1e-4}});
    ex.published_gain = rows({{6.8981, 84.9224}});
    return ex;
}

Example example2() {
    Example ex;
    ex.name = "example2";
    ex.provenance =
        "fourth-order two-input aircraft model with one output (Geromel et al. 1994, "
        "Cao et al. 1998, Mesbahi 1999); Q = I4, R = I2; published gain F = [2.8334 8.8618]";
    auto& sys = ex.file.system;
    sys.A = rows({{-0.0366, 0.0271, 0.0188, -0.4555},
                  {0.0482, -1.0100, 0.0024, -4.0208},
                  {0.1002, 0.3681, -0.7070, 1.4200},
                  {0, 0, 1, 0}});
    sys.B = rows({{0.4422, 0.1761}, {3.5446, -7.5922}, {-5.5200, 4.4900}, {0, 0}});
    sys.C = rows({{0, 1, 0, 0}});
    sys.mode = SystemMode::NoD;
    ex.file.Q = Matrix::Identity(4, 4);
    ex.file.R = Matrix::Identity(2, 2);
    // m = 2, p = 1: the printed row is the 2 x 1 gain.
    ex.published_gain = rows({{2.8334}, {8.8618}});
    return ex;
}

}  // namespace

const std::vector<Example>& examples() {
    static const std::vector<Example> all{example1(), example2()};
    return all;
}

const Example& find_example(const std::string& name) {
    for (const auto& ex : examples()) {
        if (ex.name == name) return ex;
    }
    throw InputError("unknown example '" + name + "' (known: example1, example2)");
}

}  // namespace sofctl
