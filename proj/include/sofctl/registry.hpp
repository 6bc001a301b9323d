#pragma once

#include <string>
#include <vector>

#include "sofctl/io.hpp"

namespace sofctl {

// One of the worked examples shipped with the tool.
struct Example {
    std::string name;
    std::string provenance;
    io::SystemFile file;  // system with its Q and R
    Matrix published_gain;
};

const std::vector<Example>& examples();

/// Throws InputError for an unknown name.
const Example& find_example(const std::string& name);

}  // namespace sofctl
