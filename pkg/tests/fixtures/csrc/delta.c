void first(char *a) {
    char t[8];
    strcpy(t, a);
}

void second(char *b) {
    char u[8];
    int unused = 0;
    strcpy(u, b);
}
