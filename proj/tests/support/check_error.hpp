#pragma once

#include "doctest.h"

#include "evacnet/error.hpp"

// Asserts that `expr` throws evacnet::Error with the given code.
#define CHECK_ERROR_CODE(expr, expected_code)                                        \
    do {                                                                             \
        bool thrown_ = false;                                                        \
        try {                                                                        \
            (void)(expr);                                                            \
        } catch (const ::evacnet::Error& e_) {                                       \
            thrown_ = true;                                                          \
            CHECK_MESSAGE(e_.code() == (expected_code), e_.what());                  \
        }                                                                            \
        CHECK_MESSAGE(thrown_, "expected " << ::evacnet::to_string(expected_code));  \
    } while (false)
